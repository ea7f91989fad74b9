// Copyright 2026 The mcquic Authors
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

#include <openssl/evp.h>

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>

#include "mcquic/bytes.hpp"

namespace mcquic {

// Line-delimited trace: "<time_us> <kind> key=value ...". One event per
// line so offline checkers and diff tools work on it; the running SHA-256
// of the byte stream is the run's trace hash. Field schema in docs/trace.md.
class TraceWriter {
 public:
  explicit TraceWriter(std::ostream* os = nullptr) : os_(os) {
    md_ = EVP_MD_CTX_new();
    EVP_DigestInit_ex(md_, EVP_sha256(), nullptr);
  }
  ~TraceWriter() { EVP_MD_CTX_free(md_); }
  TraceWriter(const TraceWriter&) = delete;
  TraceWriter& operator=(const TraceWriter&) = delete;

  using Field = std::pair<std::string_view, std::string>;

  void record(uint64_t t_us, std::string_view kind, std::initializer_list<Field> fields) {
    line_.clear();
    line_ += std::to_string(t_us);
    line_ += ' ';
    line_ += kind;
    for (const auto& [k, v] : fields) {
      line_ += ' ';
      line_ += k;
      line_ += '=';
      line_ += v;
    }
    line_ += '\n';
    EVP_DigestUpdate(md_, line_.data(), line_.size());
    if (os_) os_->write(line_.data(), static_cast<std::streamsize>(line_.size()));
    ++lines_;
  }

  uint64_t lines() const { return lines_; }

  std::string hash_hex() const {
    EVP_MD_CTX* copy = EVP_MD_CTX_new();
    EVP_MD_CTX_copy_ex(copy, md_);
    unsigned char out[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(copy, out, &len);
    EVP_MD_CTX_free(copy);
    return to_hex(ByteSpan(out, len));
  }

 private:
  std::ostream* os_;
  EVP_MD_CTX* md_;
  std::string line_;
  uint64_t lines_ = 0;
};

}  // namespace mcquic
