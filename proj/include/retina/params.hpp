/* Copyright 2026 The Retina Report Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <string>

#include "retina/checkpoint.hpp"
#include "retina/tape.hpp"

namespace retina {

/// Puts checkpoint parameters on a tape either as trainable leaves (gradients
/// accumulate into the checkpoint tensors) or as read-only constants.
class ParamBinder {
 public:
  static ParamBinder trainable(ModelCheckpoint& ckpt) { return ParamBinder(&ckpt, &ckpt); }
  static ParamBinder frozen(const ModelCheckpoint& ckpt) { return ParamBinder(&ckpt, nullptr); }

  nn::Var operator()(nn::Tape& tape, const std::string& name) const {
    if (writable_) return tape.parameter(writable_->param(name));
    return tape.constant_ref(ckpt_->param(name));
  }

  const ModelCheckpoint& checkpoint() const { return *ckpt_; }

 private:
  ParamBinder(const ModelCheckpoint* ckpt, ModelCheckpoint* writable) : ckpt_(ckpt), writable_(writable) {}

  const ModelCheckpoint* ckpt_;
  ModelCheckpoint* writable_;
};

}  // namespace retina
