// Copyright (c) 2026 The BIP Authors
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

#ifndef BIP_COMMON_IO_H_
#define BIP_COMMON_IO_H_

#include <string>
#include <vector>

namespace bip {

std::string ReadFileOrThrow(const std::string& path);
void WriteFileOrThrow(const std::string& path, const std::string& content);
void EnsureDir(const std::string& path);
bool FileExists(const std::string& path);

std::vector<std::string> SplitString(const std::string& s, char sep);
std::string TrimString(const std::string& s);

// Floats in emitted tables use 6 significant digits.
std::string FormatFloat(double v);

}  // namespace bip

#endif  // BIP_COMMON_IO_H_
