#pragma once

// SDNsec shim header codec.
//
// Unicast layout (all integers big-endian):
//
//   byte 0      pkt_type (bit 7) | do_not_detour (bit 6) | lfc (bits 5..0)
//   byte 1      fe_ptr
//   bytes 2-5   exp_time (seconds)
//   6 + 8k      flow block k, k = 0..lfc: flow_id(3) seq_no(3) egress_id(2)
//   6+(lfc+1)*8 pvf (8)
//   6+(lfc+2)*8 forwarding entries, 8 bytes each: egress_if(1) mac(7)
//
// Multicast layout (22 bytes):
//
//   byte 0 flags (bit 7 set) | byte 1 reserved | bytes 2-5 exp_time |
//   bytes 6-8 tree_id | bytes 9-11 seq_no | bytes 12-13 reserved | bytes 14-21 pvf
//
// Reserved bits encode as zero and are ignored on decode.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "sdnsec/types.hpp"

namespace sdnsec {

constexpr std::size_t kFixedBytes = 6;
constexpr std::size_t kBlockBytes = 8;
constexpr std::size_t kPvfBytes = 8;
constexpr std::size_t kFeBytes = 8;
constexpr std::size_t kFeMacBytes = 7;
constexpr std::size_t kMinHeaderBytes = kFixedBytes + 2 * kBlockBytes;  // 22
constexpr std::size_t kMulticastHeaderBytes = 22;
constexpr std::uint8_t kMaxLfc = 63;
constexpr std::size_t kMaxFes = 255;

using FeMac = std::array<std::uint8_t, kFeMacBytes>;
using PvfValue = std::array<std::uint8_t, kPvfBytes>;

struct HeaderFixed {
  bool pkt_type = false;
  bool do_not_detour = false;
  std::uint8_t lfc = 0;
  std::uint8_t fe_ptr = 0;
  std::uint32_t exp_time = 0;

  friend bool operator==(const HeaderFixed&, const HeaderFixed&) = default;
};

struct FlowInfoBlock {
  std::uint32_t flow_id = 0;  // 24 bits; FlowID or FailoverPathID
  std::uint32_t seq_no = 0;   // 24 bits
  SwitchId egress_id{};

  friend bool operator==(const FlowInfoBlock&, const FlowInfoBlock&) = default;
};

struct ForwardingEntry {
  Interface egress_if = 0;
  FeMac mac{};

  friend bool operator==(const ForwardingEntry&, const ForwardingEntry&) = default;
};

struct SdnsecHeader {
  HeaderFixed fixed;
  std::vector<FlowInfoBlock> flow_blocks;  // original first, failovers appended
  PvfValue pvf{};
  std::vector<ForwardingEntry> fes;

  // The block whose id keys the segment currently being forwarded.
  const FlowInfoBlock& current_block() const { return flow_blocks.back(); }
  FlowInfoBlock& current_block() { return flow_blocks.back(); }

  std::size_t encoded_size() const {
    return kFixedBytes + (flow_blocks.size() + 1) * kBlockBytes + fes.size() * kFeBytes;
  }

  friend bool operator==(const SdnsecHeader&, const SdnsecHeader&) = default;
};

struct MulticastHeader {
  std::uint32_t exp_time = 0;
  std::uint32_t tree_id = 0;  // 24 bits
  std::uint32_t seq_no = 0;   // 24 bits
  PvfValue pvf{};

  friend bool operator==(const MulticastHeader&, const MulticastHeader&) = default;
};

using Header = std::variant<SdnsecHeader, MulticastHeader>;

// -----------------------------------------------------------------------------
// Offsets

constexpr std::size_t fe_slot_offset(unsigned lfc, unsigned fe_ptr) {
  return kFixedBytes + (lfc + 2) * kBlockBytes + fe_ptr * kFeBytes;
}

constexpr std::size_t current_flow_block_offset(unsigned lfc) {
  return kFixedBytes + lfc * kBlockBytes;
}

constexpr std::size_t pvf_offset(unsigned lfc) {
  return kFixedBytes + (lfc + 1) * kBlockBytes;
}

// Header bytes added to a packet whose path spans `path_switches` switches,
// ingress and egress included.
inline std::size_t overhead_bytes(std::size_t path_switches) {
  if (path_switches == 0) throw Error("overhead_bytes: path must contain at least one switch");
  if (path_switches - 1 > kMaxFes) throw Error("overhead_bytes: path longer than 256 switches");
  return kMinHeaderBytes + kFeBytes * (path_switches - 1);
}

// -----------------------------------------------------------------------------
// Encode

namespace detail {

inline void check_id24(std::uint32_t v, const char* what) {
  if (v > kId24Max) throw EncodeError(std::string(what) + " exceeds 24 bits");
}

}  // namespace detail

inline void validate(const SdnsecHeader& h) {
  if (h.fixed.pkt_type) throw EncodeError("unicast header has pkt_type set");
  if (h.fixed.lfc > kMaxLfc) throw EncodeError("lfc exceeds 63");
  if (h.flow_blocks.size() != std::size_t{h.fixed.lfc} + 1)
    throw EncodeError("flow block count must equal lfc + 1");
  if (h.fes.size() > kMaxFes) throw EncodeError("more than 255 forwarding entries");
  if (h.fixed.fe_ptr > h.fes.size()) throw EncodeError("fe_ptr beyond forwarding entries");
  for (const auto& b : h.flow_blocks) {
    detail::check_id24(b.flow_id, "flow_id");
    detail::check_id24(b.seq_no, "seq_no");
  }
}

inline Bytes encode(const SdnsecHeader& h) {
  validate(h);
  Bytes out(h.encoded_size());
  std::uint8_t* p = out.data();
  p[0] = static_cast<std::uint8_t>((h.fixed.do_not_detour ? 0x40 : 0) | (h.fixed.lfc & 0x3F));
  p[1] = h.fixed.fe_ptr;
  be::put_u32(p + 2, h.fixed.exp_time);
  p += kFixedBytes;
  for (const auto& b : h.flow_blocks) {
    be::put_u24(p, b.flow_id);
    be::put_u24(p + 3, b.seq_no);
    be::put_u16(p + 6, to_int(b.egress_id));
    p += kBlockBytes;
  }
  std::copy(h.pvf.begin(), h.pvf.end(), p);
  p += kPvfBytes;
  for (const auto& fe : h.fes) {
    p[0] = fe.egress_if;
    std::copy(fe.mac.begin(), fe.mac.end(), p + 1);
    p += kFeBytes;
  }
  return out;
}

inline Bytes encode(const MulticastHeader& h) {
  detail::check_id24(h.tree_id, "tree_id");
  detail::check_id24(h.seq_no, "seq_no");
  Bytes out(kMulticastHeaderBytes, 0);
  out[0] = 0x80;
  be::put_u32(&out[2], h.exp_time);
  be::put_u24(&out[6], h.tree_id);
  be::put_u24(&out[9], h.seq_no);
  std::copy(h.pvf.begin(), h.pvf.end(), out.begin() + 14);
  return out;
}

inline Bytes encode(const Header& h) {
  return std::visit([](const auto& v) { return encode(v); }, h);
}

// -----------------------------------------------------------------------------
// Decode

inline bool is_multicast(ByteView bytes) { return !bytes.empty() && (bytes[0] & 0x80) != 0; }

inline MulticastHeader decode_multicast(ByteView bytes) {
  if (bytes.size() != kMulticastHeaderBytes)
    throw ParseError("multicast header must be exactly 22 bytes, got " +
                     std::to_string(bytes.size()));
  if (!is_multicast(bytes)) throw ParseError("pkt_type bit clear on multicast header");
  if (bytes[0] != 0x80) throw ParseError("undefined flag bits set on multicast header");
  if (bytes[1] != 0 || bytes[12] != 0 || bytes[13] != 0)
    throw ParseError("reserved multicast header bytes must be zero");
  MulticastHeader h;
  h.exp_time = be::get_u32(&bytes[2]);
  h.tree_id = be::get_u24(&bytes[6]);
  h.seq_no = be::get_u24(&bytes[9]);
  std::copy_n(bytes.begin() + 14, kPvfBytes, h.pvf.begin());
  return h;
}

inline SdnsecHeader decode_unicast(ByteView bytes) {
  if (bytes.size() < kMinHeaderBytes)
    throw ParseError("header shorter than 22 bytes: " + std::to_string(bytes.size()));
  if ((bytes.size() - kFixedBytes) % 8 != 0)
    throw ParseError("header length minus 6 is not a multiple of 8");
  if (is_multicast(bytes)) throw ParseError("pkt_type bit set on unicast header");

  SdnsecHeader h;
  h.fixed.do_not_detour = (bytes[0] & 0x40) != 0;
  h.fixed.lfc = bytes[0] & 0x3F;
  h.fixed.fe_ptr = bytes[1];
  h.fixed.exp_time = be::get_u32(&bytes[2]);

  const std::size_t fe_base = fe_slot_offset(h.fixed.lfc, 0);
  if (bytes.size() < fe_base)
    throw ParseError("header too short for lfc=" + std::to_string(h.fixed.lfc));
  const std::size_t fe_count = (bytes.size() - fe_base) / kFeBytes;
  if (fe_count > kMaxFes) throw ParseError("more than 255 forwarding entries");
  if (h.fixed.fe_ptr > fe_count) throw ParseError("fe_ptr beyond forwarding entries");

  h.flow_blocks.resize(std::size_t{h.fixed.lfc} + 1);
  for (std::size_t k = 0; k < h.flow_blocks.size(); ++k) {
    const std::uint8_t* p = &bytes[current_flow_block_offset(static_cast<unsigned>(k))];
    h.flow_blocks[k].flow_id = be::get_u24(p);
    h.flow_blocks[k].seq_no = be::get_u24(p + 3);
    h.flow_blocks[k].egress_id = switch_id(be::get_u16(p + 6));
  }
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pvf_offset(h.fixed.lfc)), kPvfBytes,
              h.pvf.begin());
  h.fes.resize(fe_count);
  for (std::size_t i = 0; i < fe_count; ++i) {
    const std::size_t off = fe_slot_offset(h.fixed.lfc, static_cast<unsigned>(i));
    h.fes[i].egress_if = bytes[off];
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(off + 1), kFeMacBytes,
                h.fes[i].mac.begin());
  }
  return h;
}

inline Header decode(ByteView bytes) {
  if (bytes.size() < kMinHeaderBytes)
    throw ParseError("header shorter than 22 bytes: " + std::to_string(bytes.size()));
  if (is_multicast(bytes)) return decode_multicast(bytes);
  return decode_unicast(bytes);
}

}  // namespace sdnsec
