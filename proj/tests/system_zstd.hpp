// Copyright 2026 The SLF Authors.
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

#pragma once

// The system's shared libzstd, loaded at run time. It is a separate build of
// Zstandard from the one the library links, so frames it accepts were not
// merely checked by the code that wrote them.

#include <dlfcn.h>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace testutil {

class SystemZstd {
 public:
  SystemZstd() {
    for (const char* name : {"libzstd.so.1", "libzstd.so"}) {
      handle_ = dlopen(name, RTLD_NOW | RTLD_LOCAL);
      if (handle_) break;
    }
    if (!handle_) return;
    decompress_ = reinterpret_cast<DecompressFn>(dlsym(handle_, "ZSTD_decompress"));
    content_size_ = reinterpret_cast<ContentSizeFn>(
        dlsym(handle_, "ZSTD_getFrameContentSize"));
    frame_size_ = reinterpret_cast<FrameSizeFn>(
        dlsym(handle_, "ZSTD_findFrameCompressedSize"));
    is_error_ = reinterpret_cast<IsErrorFn>(dlsym(handle_, "ZSTD_isError"));
    version_ = reinterpret_cast<VersionFn>(dlsym(handle_, "ZSTD_versionString"));
  }
  ~SystemZstd() {
    if (handle_) dlclose(handle_);
  }
  SystemZstd(const SystemZstd&) = delete;
  SystemZstd& operator=(const SystemZstd&) = delete;

  bool available() const {
    return decompress_ && content_size_ && frame_size_ && is_error_ && version_;
  }
  std::string version() const { return available() ? version_() : ""; }

  // Decoded bytes when `frame` is exactly one complete frame.
  std::optional<std::vector<std::uint8_t>> decompress_single_frame(
      const std::vector<std::uint8_t>& frame) const {
    if (!available()) return std::nullopt;
    const std::size_t used = frame_size_(frame.data(), frame.size());
    if (is_error_(used) || used != frame.size()) return std::nullopt;
    const unsigned long long size = content_size_(frame.data(), frame.size());
    if (size >= (1ULL << 40)) return std::nullopt;  // unknown or error
    std::vector<std::uint8_t> out(static_cast<std::size_t>(size));
    const std::size_t n =
        decompress_(out.data(), out.size(), frame.data(), frame.size());
    if (is_error_(n) || n != out.size()) return std::nullopt;
    return out;
  }

 private:
  using DecompressFn = std::size_t (*)(void*, std::size_t, const void*, std::size_t);
  using ContentSizeFn = unsigned long long (*)(const void*, std::size_t);
  using FrameSizeFn = std::size_t (*)(const void*, std::size_t);
  using IsErrorFn = unsigned (*)(std::size_t);
  using VersionFn = const char* (*)();

  void* handle_ = nullptr;
  DecompressFn decompress_ = nullptr;
  ContentSizeFn content_size_ = nullptr;
  FrameSizeFn frame_size_ = nullptr;
  IsErrorFn is_error_ = nullptr;
  VersionFn version_ = nullptr;
};

}  // namespace testutil
