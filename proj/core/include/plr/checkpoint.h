// Copyright 2026 The PLR Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PLR_CHECKPOINT_H_
#define PLR_CHECKPOINT_H_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "plr/nn.h"

namespace plr {

// Checkpoint container: a cereal portable-binary archive holding the magic
// string "PLRCKPT1" followed by a list of named tensors
// (name, rows, cols, row-major values). Optimizer state is not stored.
struct NamedTensor {
  std::string name;
  Matrix value;
};

void save_tensors(const std::filesystem::path& path,
                  std::span<const NamedTensor> tensors);
std::vector<NamedTensor> load_tensors(const std::filesystem::path& path);

std::vector<NamedTensor> snapshot(std::span<const Param* const> params);
// Copies values into params by position; names and shapes must match.
void restore(std::span<Param* const> params, std::span<const NamedTensor> tensors);

}  // namespace plr

#endif  // PLR_CHECKPOINT_H_
