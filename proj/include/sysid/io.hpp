// Copyright 2026 The sysid Authors
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

#ifndef SYSID_IO_HPP_
#define SYSID_IO_HPP_

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "sysid/linalg.hpp"

namespace sysid {

using Json = nlohmann::json;

inline constexpr const char* kVersion = "sysid 1.0.0";

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

// Row-major nested arrays.
Json matrix_to_json(const Mat& M);
Mat matrix_from_json(const Json& j);

// 64-bit FNV-1a, rendered as 16 hex digits.
class Fnv1a {
 public:
  void update(const void* data, std::size_t n);
  void update(std::string_view s) { update(s.data(), s.size()); }
  void update(const Mat& M);
  void update_u64(std::uint64_t v) { update(&v, sizeof v); }
  void update_f64(double v) { update(&v, sizeof v); }
  std::uint64_t value() const { return h_; }
  std::string hex() const;

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
void ensure_dir(const std::string& path);

}  // namespace sysid

#endif  // SYSID_IO_HPP_
