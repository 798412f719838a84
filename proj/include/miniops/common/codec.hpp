/*
    Copyright (c) 2026 The miniops Authors
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at
        http://www.apache.org/licenses/LICENSE-2.0
    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace miniops {

// RFC 1952 gzip member.
std::string gzip_compress(std::string_view data);

// Throws Error(invalid_argument) on a malformed stream.
std::string gzip_decompress(std::string_view data);

std::uint32_t crc32(std::string_view data);

}  // namespace miniops
