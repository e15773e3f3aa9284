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

#include <cstddef>
#include <span>
#include <vector>

namespace retina {

/// Align-corners bilinear resampling of a row-major h x w plane to H x W.
/// Corner samples map exactly onto corner samples.
std::vector<double> resize_bilinear(std::span<const double> plane, std::size_t h, std::size_t w, std::size_t H,
                                    std::size_t W);

}  // namespace retina
