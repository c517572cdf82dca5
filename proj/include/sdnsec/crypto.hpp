#pragma once

// Truncated single-block CBC-MAC and the forwarding-entry / path-validation
// chains built on it.
//
// Every MAC input fits one AES block: 15 bytes for a forwarding entry
// (egress_if || previous chain value || bootstrap), 14 bytes for a PVF step
// (previous PVF || tweak), and 6 bytes for the ingress PVF (tweak only).
// Inputs are zero-padded to 16 bytes; with a single block CBC-MAC reduces to
// one block-cipher call.

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "sdnsec/types.hpp"
#include "sdnsec/wire.hpp"

namespace sdnsec {

constexpr std::size_t kKeyBytes = 16;
constexpr std::size_t kBlockCipherBytes = 16;
constexpr std::size_t kChainBytes = 7;
constexpr std::size_t kFeMacInputBytes = 15;
constexpr std::size_t kPvfStepInputBytes = 14;
constexpr std::size_t kTweakBytes = 6;

using Key = std::array<std::uint8_t, kKeyBytes>;
using ChainValue = std::array<std::uint8_t, kChainBytes>;

static_assert(kChainBytes == kFeMacBytes, "chain values are truncated FE MACs");
static_assert(1 + 2 * kChainBytes == kFeMacInputBytes);
static_assert(kPvfBytes + kTweakBytes == kPvfStepInputBytes);
static_assert(kFeMacInputBytes <= kBlockCipherBytes && kPvfStepInputBytes <= kBlockCipherBytes);

struct SwitchKeys {
  SwitchId switch_id{};
  Key k_fe{};
  Key k_pvf{};
};

// C = id || seq_no, where id is a FlowID, FailoverPathID or TreeID.
struct PvfTweak {
  std::uint32_t id = 0;
  std::uint32_t seq_no = 0;

  std::array<std::uint8_t, kTweakBytes> bytes() const {
    std::array<std::uint8_t, kTweakBytes> out{};
    be::put_u24(out.data(), id & kId24Mask);
    be::put_u24(out.data() + 3, seq_no & kId24Mask);
    return out;
  }

  friend bool operator==(const PvfTweak&, const PvfTweak&) = default;
};

// Histogram of assembled MAC input lengths, indexed [out_len][msg_len]. Used by
// tests to check that every code path feeds the cipher fixed-length inputs.
struct MacInputStats {
  std::array<std::array<std::uint64_t, kBlockCipherBytes + 1>, kBlockCipherBytes + 1> counts{};

  void reset() { counts = {}; }
  std::uint64_t count(std::size_t out_len, std::size_t msg_len) const {
    return counts.at(out_len).at(msg_len);
  }
  std::uint64_t total(std::size_t out_len) const {
    std::uint64_t sum = 0;
    for (auto c : counts.at(out_len)) sum += c;
    return sum;
  }
};

inline MacInputStats& mac_input_stats() {
  static thread_local MacInputStats stats;
  return stats;
}

// -----------------------------------------------------------------------------
// Block cipher

namespace detail {

struct EvpCtxDeleter {
  void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};

inline std::array<std::uint8_t, kBlockCipherBytes> aes128_encrypt_block(
    const Key& key, const std::array<std::uint8_t, kBlockCipherBytes>& block) {
  std::unique_ptr<EVP_CIPHER_CTX, EvpCtxDeleter> ctx(EVP_CIPHER_CTX_new());
  if (!ctx) throw Error("EVP_CIPHER_CTX_new failed");
  if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_ecb(), nullptr, key.data(), nullptr) != 1)
    throw Error("EVP_EncryptInit_ex failed");
  EVP_CIPHER_CTX_set_padding(ctx.get(), 0);
  std::array<std::uint8_t, kBlockCipherBytes> out{};
  int len = 0;
  if (EVP_EncryptUpdate(ctx.get(), out.data(), &len, block.data(),
                        static_cast<int>(block.size())) != 1 ||
      len != static_cast<int>(kBlockCipherBytes))
    throw Error("EVP_EncryptUpdate failed");
  return out;
}

}  // namespace detail

// Zero-pads msg to one block, encrypts once under key, keeps the first out_len
// bytes.
inline Bytes mac_trunc(const Key& key, ByteView msg, std::size_t out_len) {
  if (msg.size() > kBlockCipherBytes)
    throw Error("mac_trunc: message longer than one cipher block");
  if (out_len == 0 || out_len > kBlockCipherBytes)
    throw Error("mac_trunc: invalid output length");
  ++mac_input_stats().counts[out_len][msg.size()];
  std::array<std::uint8_t, kBlockCipherBytes> block{};
  std::copy(msg.begin(), msg.end(), block.begin());
  auto full = detail::aes128_encrypt_block(key, block);
  return Bytes(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(out_len));
}

// -----------------------------------------------------------------------------
// Forwarding-entry chain

inline ChainValue bootstrap_chain(std::uint32_t flow_id, std::uint32_t exp_time) {
  ChainValue b{};
  be::put_u24(b.data(), flow_id & kId24Mask);
  be::put_u32(b.data() + 3, exp_time);
  return b;
}

inline std::array<std::uint8_t, kFeMacInputBytes> fe_mac_input(Interface egress_if,
                                                               const ChainValue& prev,
                                                               const ChainValue& b) {
  std::array<std::uint8_t, kFeMacInputBytes> in{};
  in[0] = egress_if;
  std::copy(prev.begin(), prev.end(), in.begin() + 1);
  std::copy(b.begin(), b.end(), in.begin() + 1 + kChainBytes);
  return in;
}

inline FeMac fe_mac(const SwitchKeys& keys, Interface egress_if, const ChainValue& prev,
                    const ChainValue& b) {
  const auto in = fe_mac_input(egress_if, prev, b);
  const Bytes mac = mac_trunc(keys.k_fe, in, kFeMacBytes);
  FeMac out{};
  std::copy(mac.begin(), mac.end(), out.begin());
  return out;
}

inline bool fe_mac_equal(const FeMac& a, const FeMac& b) {
  // constant-time compare
  std::uint8_t diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff |= static_cast<std::uint8_t>(a[i] ^ b[i]);
  return diff == 0;
}

// -----------------------------------------------------------------------------
// Key store

class KeyStore {
 public:
  const SwitchKeys& at(SwitchId id) const {
    auto it = keys_.find(id);
    if (it == keys_.end())
      throw ProvisioningError("no keys provisioned for switch " + to_string(id));
    return it->second;
  }

  bool contains(SwitchId id) const { return keys_.count(id) != 0; }

  void insert(const SwitchKeys& keys) {
    if (keys.k_fe == keys.k_pvf)
      throw ProvisioningError("k_fe and k_pvf must differ for switch " + to_string(keys.switch_id));
    keys_[keys.switch_id] = keys;
  }

  // Fresh keys from the OpenSSL CSPRNG.
  const SwitchKeys& provision_random(SwitchId id) {
    SwitchKeys k;
    k.switch_id = id;
    do {
      if (RAND_bytes(k.k_fe.data(), static_cast<int>(k.k_fe.size())) != 1 ||
          RAND_bytes(k.k_pvf.data(), static_cast<int>(k.k_pvf.size())) != 1)
        throw ProvisioningError("RAND_bytes failed");
    } while (k.k_fe == k.k_pvf);
    insert(k);
    return keys_.at(id);
  }

  // Reproducible keys for simulation runs, derived from a seeded PRNG.
  const SwitchKeys& provision_seeded(SwitchId id, std::mt19937_64& rng) {
    SwitchKeys k;
    k.switch_id = id;
    do {
      for (auto* key : {&k.k_fe, &k.k_pvf})
        for (auto& byte : *key) byte = static_cast<std::uint8_t>(rng());
    } while (k.k_fe == k.k_pvf);
    insert(k);
    return keys_.at(id);
  }

  std::size_t size() const { return keys_.size(); }
  const std::map<SwitchId, SwitchKeys>& all() const { return keys_; }

 private:
  std::map<SwitchId, SwitchKeys> keys_;
};

// One hop of a source route: the switch and the interface it must send on.
struct PathHop {
  SwitchId sw{};
  Interface egress_if = 0;

  friend bool operator==(const PathHop&, const PathHop&) = default;
};

// FEs for switches S1..Sn (the ingress S0 carries none). chain_0 is the
// bootstrap value; each MAC becomes the chain value for the next switch.
inline std::vector<ForwardingEntry> build_fe_list(std::span<const PathHop> hops,
                                                  const KeyStore& keys, std::uint32_t flow_id,
                                                  std::uint32_t exp_time) {
  const ChainValue b = bootstrap_chain(flow_id, exp_time);
  ChainValue chain = b;
  std::vector<ForwardingEntry> fes;
  fes.reserve(hops.size());
  for (const PathHop& hop : hops) {
    FeMac mac = fe_mac(keys.at(hop.sw), hop.egress_if, chain, b);
    fes.push_back({hop.egress_if, mac});
    chain = mac;
  }
  return fes;
}

// Checks FE slot `slot` as the switch owning `keys` would: the previous chain
// value is the bootstrap for slot 0, else the MAC of the preceding slot.
inline bool verify_fe(const SwitchKeys& keys, std::span<const ForwardingEntry> fes,
                      std::size_t slot, const ChainValue& bootstrap) {
  if (slot >= fes.size()) return false;
  const ChainValue prev = slot == 0 ? bootstrap : fes[slot - 1].mac;
  return fe_mac_equal(fe_mac(keys, fes[slot].egress_if, prev, bootstrap), fes[slot].mac);
}

// -----------------------------------------------------------------------------
// Path-validation chain

inline PvfValue pvf_init(const SwitchKeys& keys, const PvfTweak& tweak) {
  const auto c = tweak.bytes();
  const Bytes mac = mac_trunc(keys.k_pvf, c, kPvfBytes);
  PvfValue out{};
  std::copy(mac.begin(), mac.end(), out.begin());
  return out;
}

inline std::array<std::uint8_t, kPvfStepInputBytes> pvf_step_input(const PvfValue& prev,
                                                                   const PvfTweak& tweak) {
  std::array<std::uint8_t, kPvfStepInputBytes> in{};
  std::copy(prev.begin(), prev.end(), in.begin());
  const auto c = tweak.bytes();
  std::copy(c.begin(), c.end(), in.begin() + kPvfBytes);
  return in;
}

inline PvfValue pvf_step(const SwitchKeys& keys, const PvfValue& prev, const PvfTweak& tweak) {
  const auto in = pvf_step_input(prev, tweak);
  const Bytes mac = mac_trunc(keys.k_pvf, in, kPvfBytes);
  PvfValue out{};
  std::copy(mac.begin(), mac.end(), out.begin());
  return out;
}

// A run of consecutive switches that all MAC the PVF with the same tweak.
struct PvfSegment {
  std::vector<SwitchId> switches;
  PvfTweak tweak;
};

// Folds pvf_init over the first switch of the first non-empty segment, then
// pvf_step over every following switch, using each segment's tweak.
inline PvfValue expected_pvf(std::span<const PvfSegment> segments, const KeyStore& keys) {
  bool started = false;
  PvfValue pvf{};
  for (const PvfSegment& seg : segments) {
    for (SwitchId sw : seg.switches) {
      if (!started) {
        pvf = pvf_init(keys.at(sw), seg.tweak);
        started = true;
      } else {
        pvf = pvf_step(keys.at(sw), pvf, seg.tweak);
      }
    }
  }
  if (!started) throw Error("expected_pvf: no switches in any segment");
  return pvf;
}

}  // namespace sdnsec
