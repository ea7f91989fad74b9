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
#include <openssl/hmac.h>

#include <algorithm>
#include <memory>
#include <optional>

#include "mcquic/types.hpp"

namespace mcquic {

// KDF labels. Channel packet protection uses "mcquic key"/"mcquic iv"
// expanded from the channel secret; the header key is expanded from the
// static header secret and never rotates.
inline constexpr std::string_view kLabelKey = "mcquic key";
inline constexpr std::string_view kLabelIv = "mcquic iv";
inline constexpr std::string_view kLabelHp = "mcquic hp";

struct AeadSpec {
  size_t key_len;
  size_t iv_len;
  size_t tag_len;
};

inline AeadSpec aead_spec(AeadAlgorithmId id) {
  switch (id) {
    case AeadAlgorithmId::Aes128Gcm: return {16, 12, 16};
  }
  throw ProtocolError("unsupported aead id");
}

inline Bytes hmac_sha256(ByteSpan key, ByteSpan data) {
  Bytes out(32);
  unsigned int len = 32;
  if (!::HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(),
              out.data(), &len))
    throw std::runtime_error("HMAC failure");
  out.resize(len);
  return out;
}

// HKDF-Expand with HMAC-SHA256; info is the label, no extract step.
inline Bytes hkdf_expand(ByteSpan secret, std::string_view label, size_t out_len) {
  Bytes out;
  Bytes block;
  uint8_t counter = 1;
  while (out.size() < out_len) {
    Bytes input = block;
    input.insert(input.end(), label.begin(), label.end());
    input.push_back(counter++);
    block = hmac_sha256(secret, input);
    out.insert(out.end(), block.begin(), block.end());
  }
  out.resize(out_len);
  return out;
}

struct ChannelSecret {
  Bytes secret;                     // 16..64 bytes
  uint64_t from_packet_number = 0;  // first packet number this secret applies to

  void validate() const {
    if (secret.size() < 16 || secret.size() > 64)
      throw std::invalid_argument("channel secret length out of bounds");
  }
};

struct ChannelKeys {
  Bytes aead_key;
  Bytes iv;
};

// Deterministic: the same (secret, aead) always yields the same keys.
inline ChannelKeys derive_channel_keys(ByteSpan secret, AeadAlgorithmId aead) {
  AeadSpec spec = aead_spec(aead);
  return ChannelKeys{hkdf_expand(secret, kLabelKey, spec.key_len),
                     hkdf_expand(secret, kLabelIv, spec.iv_len)};
}

inline ChannelKeys derive_channel_keys(const ChannelSecret& secret, AeadAlgorithmId aead) {
  secret.validate();
  return derive_channel_keys(secret.secret, aead);
}

inline Bytes derive_header_key(ByteSpan header_secret) {
  return hkdf_expand(header_secret, kLabelHp, 16);
}

inline Bytes compute_digest(HashAlgorithmId id, ByteSpan data) {
  const EVP_MD* md = nullptr;
  switch (id) {
    case HashAlgorithmId::Sha1: md = EVP_sha1(); break;
    case HashAlgorithmId::Sha256: md = EVP_sha256(); break;
  }
  if (!md) throw ProtocolError("unsupported hash id");
  Bytes out(EVP_MAX_MD_SIZE);
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), out.data(), &len, md, nullptr))
    throw std::runtime_error("digest failure");
  out.resize(len);
  return out;
}

// Digest of a complete datagram as transmitted; the integrity machinery
// hashes ciphertext so verification can precede decryption.
inline Bytes compute_packet_digest(HashAlgorithmId id, ByteSpan datagram) {
  return compute_digest(id, datagram);
}

namespace detail {

struct EvpCtxDeleter {
  void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
using EvpCtx = std::unique_ptr<EVP_CIPHER_CTX, EvpCtxDeleter>;

}  // namespace detail

// AES-128-GCM seal: returns ciphertext || 16-byte tag.
inline Bytes aead_seal(ByteSpan key, ByteSpan nonce, ByteSpan aad, ByteSpan plaintext) {
  detail::EvpCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) throw std::runtime_error("EVP ctx");
  if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, nullptr, nullptr) != 1)
    throw std::runtime_error("seal init");
  EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(nonce.size()), nullptr);
  if (EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) != 1)
    throw std::runtime_error("seal key");
  int outl = 0;
  if (!aad.empty() &&
      EVP_EncryptUpdate(ctx.get(), nullptr, &outl, aad.data(), static_cast<int>(aad.size())) != 1)
    throw std::runtime_error("seal aad");
  Bytes out(plaintext.size() + 16);
  int ctl = 0;
  if (EVP_EncryptUpdate(ctx.get(), out.data(), &ctl, plaintext.data(),
                        static_cast<int>(plaintext.size())) != 1)
    throw std::runtime_error("seal update");
  int fin = 0;
  if (EVP_EncryptFinal_ex(ctx.get(), out.data() + ctl, &fin) != 1)
    throw std::runtime_error("seal final");
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, 16, out.data() + ctl + fin) != 1)
    throw std::runtime_error("seal tag");
  out.resize(static_cast<size_t>(ctl + fin) + 16);
  return out;
}

// Returns nullopt on authentication failure.
inline std::optional<Bytes> aead_open(ByteSpan key, ByteSpan nonce, ByteSpan aad,
                                      ByteSpan ciphertext) {
  if (ciphertext.size() < 16) return std::nullopt;
  size_t ctlen = ciphertext.size() - 16;
  detail::EvpCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) throw std::runtime_error("EVP ctx");
  if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, nullptr, nullptr) != 1)
    throw std::runtime_error("open init");
  EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(nonce.size()), nullptr);
  if (EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) != 1)
    throw std::runtime_error("open key");
  int outl = 0;
  if (!aad.empty() &&
      EVP_DecryptUpdate(ctx.get(), nullptr, &outl, aad.data(), static_cast<int>(aad.size())) != 1)
    throw std::runtime_error("open aad");
  Bytes out(ctlen);
  int ptl = 0;
  if (ctlen > 0 && EVP_DecryptUpdate(ctx.get(), out.data(), &ptl, ciphertext.data(),
                                     static_cast<int>(ctlen)) != 1)
    return std::nullopt;
  Bytes tag(ciphertext.begin() + static_cast<long>(ctlen), ciphertext.end());
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, 16, tag.data()) != 1)
    throw std::runtime_error("open tag");
  int fin = 0;
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + ptl, &fin) != 1) return std::nullopt;
  out.resize(static_cast<size_t>(ptl + fin));
  return out;
}

// Packet-number nonce: IV xored with the packet number, right-aligned.
inline Bytes packet_nonce(ByteSpan iv, uint64_t packet_number) {
  Bytes nonce(iv.begin(), iv.end());
  for (size_t i = 0; i < 8 && i < nonce.size(); ++i)
    nonce[nonce.size() - 1 - i] ^= static_cast<uint8_t>(packet_number >> (8 * i));
  return nonce;
}

// Header-protection mask: AES-128-ECB over a 16-byte ciphertext sample.
inline Bytes header_protection_mask(ByteSpan hp_key, ByteSpan sample) {
  if (hp_key.size() != 16 || sample.size() != 16)
    throw std::invalid_argument("header protection needs 16-byte key and sample");
  detail::EvpCtx ctx(EVP_CIPHER_CTX_new());
  if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_ecb(), nullptr, hp_key.data(), nullptr) != 1)
    throw std::runtime_error("hp init");
  EVP_CIPHER_CTX_set_padding(ctx.get(), 0);
  Bytes mask(32);
  int outl = 0;
  if (EVP_EncryptUpdate(ctx.get(), mask.data(), &outl, sample.data(), 16) != 1)
    throw std::runtime_error("hp update");
  mask.resize(16);
  return mask;
}

// Ordered per-channel secrets; the secret with the largest boundary at or
// below a packet number protects that packet.
class SecretStore {
 public:
  struct Entry {
    ChannelSecret secret;
    ChannelKeys keys;
  };

  void add(const ChannelSecret& s, AeadAlgorithmId aead) {
    s.validate();
    ChannelKeys keys = derive_channel_keys(s, aead);
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) {
      return e.secret.from_packet_number == s.from_packet_number;
    });
    if (it != entries_.end()) {
      it->secret = s;  // re-announcement of a boundary: latest wins
      it->keys = std::move(keys);
      return;
    }
    entries_.push_back(Entry{s, std::move(keys)});
    std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
      return a.secret.from_packet_number < b.secret.from_packet_number;
    });
  }

  // Largest boundary <= pn; nullptr when no secret applies yet.
  const Entry* select(uint64_t pn) const {
    const Entry* best = nullptr;
    for (const auto& e : entries_) {
      if (e.secret.from_packet_number <= pn) best = &e;
      else break;
    }
    return best;
  }

  bool empty() const { return entries_.empty(); }
  size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

}  // namespace mcquic
