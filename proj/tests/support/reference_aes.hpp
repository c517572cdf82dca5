#pragma once

// Straightforward AES-128 encryption used only as a second implementation to
// check the OpenSSL-backed one. The S-box is derived from the field inverse
// and affine map rather than copied from a table.

#include <array>
#include <cstdint>

namespace ref {

using Block = std::array<std::uint8_t, 16>;
using Key = std::array<std::uint8_t, 16>;

inline std::uint8_t xtime(std::uint8_t x) {
  return static_cast<std::uint8_t>((x << 1) ^ ((x & 0x80) ? 0x1B : 0x00));
}

inline std::uint8_t gmul(std::uint8_t a, std::uint8_t b) {
  std::uint8_t p = 0;
  while (b) {
    if (b & 1) p ^= a;
    a = xtime(a);
    b >>= 1;
  }
  return p;
}

inline const std::array<std::uint8_t, 256>& sbox() {
  static const std::array<std::uint8_t, 256> table = [] {
    std::array<std::uint8_t, 256> s{};
    for (int x = 0; x < 256; ++x) {
      std::uint8_t inv = 0;
      if (x != 0)
        for (int y = 1; y < 256; ++y)
          if (gmul(static_cast<std::uint8_t>(x), static_cast<std::uint8_t>(y)) == 1) {
            inv = static_cast<std::uint8_t>(y);
            break;
          }
      auto rotl = [](std::uint8_t v, int n) {
        return static_cast<std::uint8_t>((v << n) | (v >> (8 - n)));
      };
      s[x] = static_cast<std::uint8_t>(inv ^ rotl(inv, 1) ^ rotl(inv, 2) ^ rotl(inv, 3) ^
                                       rotl(inv, 4) ^ 0x63);
    }
    return s;
  }();
  return table;
}

inline std::array<Block, 11> expand(const Key& key) {
  std::array<Block, 11> rk{};
  rk[0] = key;
  std::uint8_t rcon = 1;
  for (int r = 1; r <= 10; ++r) {
    const Block& p = rk[r - 1];
    Block& k = rk[r];
    std::uint8_t t[4] = {sbox()[p[13]], sbox()[p[14]], sbox()[p[15]], sbox()[p[12]]};
    t[0] ^= rcon;
    rcon = xtime(rcon);
    for (int i = 0; i < 4; ++i) k[i] = p[i] ^ t[i];
    for (int i = 4; i < 16; ++i) k[i] = p[i] ^ k[i - 4];
  }
  return rk;
}

inline Block encrypt(const Key& key, Block s) {
  const auto rk = expand(key);
  auto add = [&](int r) {
    for (int i = 0; i < 16; ++i) s[i] ^= rk[r][i];
  };
  auto sub = [&] {
    for (auto& b : s) b = sbox()[b];
  };
  auto shift = [&] {
    Block t = s;
    for (int c = 0; c < 4; ++c)
      for (int r = 0; r < 4; ++r) s[4 * c + r] = t[4 * ((c + r) % 4) + r];
  };
  auto mix = [&] {
    for (int c = 0; c < 4; ++c) {
      std::uint8_t* col = &s[4 * c];
      const std::uint8_t a0 = col[0], a1 = col[1], a2 = col[2], a3 = col[3];
      col[0] = static_cast<std::uint8_t>(gmul(a0, 2) ^ gmul(a1, 3) ^ a2 ^ a3);
      col[1] = static_cast<std::uint8_t>(a0 ^ gmul(a1, 2) ^ gmul(a2, 3) ^ a3);
      col[2] = static_cast<std::uint8_t>(a0 ^ a1 ^ gmul(a2, 2) ^ gmul(a3, 3));
      col[3] = static_cast<std::uint8_t>(gmul(a0, 3) ^ a1 ^ a2 ^ gmul(a3, 2));
    }
  };
  add(0);
  for (int r = 1; r < 10; ++r) {
    sub();
    shift();
    mix();
    add(r);
  }
  sub();
  shift();
  add(10);
  return s;
}

}  // namespace ref
