/*
 * Copyright 2026 The greenfilter Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <array>
#include <cstdint>

namespace greenfilter {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept;

/// Standard normals addressed by (seed, path, step, channel): block b of a
/// stream yields two normals through Box-Muller.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) noexcept;

  /// Fills out[0..count) with the normals of stream (path, step, channel).
  void fill(std::uint32_t path, std::uint32_t step, std::uint32_t channel, double* out,
            std::size_t count) const noexcept;

 private:
  PhiloxKey key_;
};

}  // namespace greenfilter
