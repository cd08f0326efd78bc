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

#include "plr/checkpoint.h"

#include <fstream>
#include <string_view>

#include <cereal/archives/portable_binary.hpp>
#include <cereal/types/string.hpp>
#include <cereal/types/vector.hpp>

#include "plr/error.h"

namespace plr {
namespace {

constexpr std::string_view kMagic = "PLRCKPT1";

struct Record {
  std::string name;
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<double> values;

  template <class Archive>
  void serialize(Archive& ar) {
    ar(name, rows, cols, values);
  }
};

}  // namespace

void save_tensors(const std::filesystem::path& path,
                  std::span<const NamedTensor> tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  std::vector<Record> records;
  for (const NamedTensor& t : tensors) {
    Record r{t.name, t.value.rows(), t.value.cols(),
             std::vector<double>(t.value.data(), t.value.data() + t.value.size())};
    records.push_back(std::move(r));
  }
  out.write(kMagic.data(), static_cast<std::streamsize>(kMagic.size()));
  cereal::PortableBinaryOutputArchive ar(out);
  ar(records);
}

std::vector<NamedTensor> load_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::string magic(kMagic.size(), '\0');
  in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (!in || magic != kMagic) throw IoError(path.string() + " is not a checkpoint");
  std::vector<Record> records;
  try {
    cereal::PortableBinaryInputArchive ar(in);
    ar(records);
  } catch (const std::exception& e) {
    throw IoError("corrupt checkpoint " + path.string() + ": " + e.what());
  }
  std::vector<NamedTensor> out;
  for (Record& r : records) {
    if (static_cast<int64_t>(r.values.size()) != r.rows * r.cols) {
      throw IoError("corrupt tensor '" + r.name + "' in " + path.string());
    }
    out.push_back({r.name, Eigen::Map<Matrix>(r.values.data(), r.rows, r.cols)});
  }
  return out;
}

std::vector<NamedTensor> snapshot(std::span<const Param* const> params) {
  std::vector<NamedTensor> out;
  for (const Param* p : params) out.push_back({p->name, p->value});
  return out;
}

void restore(std::span<Param* const> params, std::span<const NamedTensor> tensors) {
  if (params.size() != tensors.size()) {
    throw InputError("checkpoint holds " + std::to_string(tensors.size()) +
                     " tensors, model has " + std::to_string(params.size()));
  }
  for (size_t i = 0; i < params.size(); ++i) {
    const NamedTensor& t = tensors[i];
    Param& p = *params[i];
    if (t.name != p.name || t.value.rows() != p.value.rows() ||
        t.value.cols() != p.value.cols()) {
      throw InputError("checkpoint tensor '" + t.name + "' does not match '" +
                       p.name + "'");
    }
    p.value = t.value;
  }
}

}  // namespace plr
