#include "ytlc/unicode.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace ytlc::uni {

std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    char32_t cp = 0xFFFD;
    std::size_t len = 1;
    if (c < 0x80) {
      cp = c;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      ++i;
      out.push_back(0xFFFD);
      continue;
    }
    if (len > 1) {
      if (i + len > s.size()) {
        out.push_back(0xFFFD);
        break;
      }
      bool ok = true;
      for (std::size_t k = 1; k < len; ++k) {
        unsigned char cc = static_cast<unsigned char>(s[i + k]);
        if ((cc & 0xC0) != 0x80) {
          ok = false;
          break;
        }
        cp = (cp << 6) | (cc & 0x3F);
      }
      if (!ok || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string encode_utf8(const std::vector<char32_t>& cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) append_utf8(out, cp);
  return out;
}

bool is_space(char32_t cp) {
  switch (cp) {
    case 0x09:
    case 0x0A:
    case 0x0B:
    case 0x0C:
    case 0x0D:
    case 0x20:
    case 0x85:
    case 0xA0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_punct_or_symbol(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  if ((cp >= 0xA1 && cp <= 0xBF) || cp == 0xD7 || cp == 0xF7) return true;
  if (cp >= 0x2010 && cp <= 0x2027) return true;
  if (cp >= 0x2030 && cp <= 0x205E) return true;
  if (cp >= 0x20A0 && cp <= 0x20CF) return true;   // currency
  if (cp >= 0x2100 && cp <= 0x2BFF) return true;   // letterlike..arrows..symbols
  if (cp >= 0x3001 && cp <= 0x303F) return true;   // CJK punctuation
  if (cp >= 0xFE50 && cp <= 0xFE6F) return true;
  if ((cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
      (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65))
    return true;
  if (cp >= 0x1F000 && cp <= 0x1FAFF) return true;  // emoji / pictographs
  return false;
}

char32_t to_lower(char32_t cp) {
  if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 0x20 : cp;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  // Latin Extended-A alternates upper/lower.
  if ((cp >= 0x100 && cp <= 0x137) || (cp >= 0x14A && cp <= 0x177))
    return (cp % 2 == 0) ? cp + 1 : cp;
  if (cp >= 0x139 && cp <= 0x148) return (cp % 2 == 1) ? cp + 1 : cp;
  if (cp == 0x178) return 0xFF;
  if (cp == 0x179 || cp == 0x17B || cp == 0x17D) return cp + 1;
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;  // Greek
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;                 // Cyrillic
  if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
  return cp;
}

std::string lowercase(std::string_view s) {
  auto cps = decode_utf8(s);
  for (auto& cp : cps) cp = to_lower(cp);
  return encode_utf8(cps);
}

namespace {

struct Composition {
  char32_t base;
  char32_t mark;
  char32_t composed;
};

// Latin precomposed forms for the combining marks that actually show up in
// the corpus. Sorted by (mark, base) is not required; linear table with a
// binary search over a sorted copy would be overkill at this size.
constexpr std::array<Composition, 96> kCompositions = {{
    // grave U+0300
    {U'A', 0x300, 0xC0},  {U'E', 0x300, 0xC8},  {U'I', 0x300, 0xCC},
    {U'O', 0x300, 0xD2},  {U'U', 0x300, 0xD9},  {U'a', 0x300, 0xE0},
    {U'e', 0x300, 0xE8},  {U'i', 0x300, 0xEC},  {U'o', 0x300, 0xF2},
    {U'u', 0x300, 0xF9},
    // acute U+0301
    {U'A', 0x301, 0xC1},  {U'E', 0x301, 0xC9},  {U'I', 0x301, 0xCD},
    {U'O', 0x301, 0xD3},  {U'U', 0x301, 0xDA},  {U'Y', 0x301, 0xDD},
    {U'a', 0x301, 0xE1},  {U'e', 0x301, 0xE9},  {U'i', 0x301, 0xED},
    {U'o', 0x301, 0xF3},  {U'u', 0x301, 0xFA},  {U'y', 0x301, 0xFD},
    {U'C', 0x301, 0x106}, {U'c', 0x301, 0x107}, {U'N', 0x301, 0x143},
    {U'n', 0x301, 0x144}, {U'S', 0x301, 0x15A}, {U's', 0x301, 0x15B},
    {U'Z', 0x301, 0x179}, {U'z', 0x301, 0x17A},
    // circumflex U+0302
    {U'A', 0x302, 0xC2},  {U'E', 0x302, 0xCA},  {U'I', 0x302, 0xCE},
    {U'O', 0x302, 0xD4},  {U'U', 0x302, 0xDB},  {U'a', 0x302, 0xE2},
    {U'e', 0x302, 0xEA},  {U'i', 0x302, 0xEE},  {U'o', 0x302, 0xF4},
    {U'u', 0x302, 0xFB},
    // tilde U+0303
    {U'A', 0x303, 0xC3},  {U'N', 0x303, 0xD1},  {U'O', 0x303, 0xD5},
    {U'a', 0x303, 0xE3},  {U'n', 0x303, 0xF1},  {U'o', 0x303, 0xF5},
    // macron U+0304
    {U'A', 0x304, 0x100}, {U'a', 0x304, 0x101}, {U'E', 0x304, 0x112},
    {U'e', 0x304, 0x113}, {U'I', 0x304, 0x12A}, {U'i', 0x304, 0x12B},
    {U'O', 0x304, 0x14C}, {U'o', 0x304, 0x14D}, {U'U', 0x304, 0x16A},
    {U'u', 0x304, 0x16B},
    // breve U+0306
    {U'A', 0x306, 0x102}, {U'a', 0x306, 0x103}, {U'G', 0x306, 0x11E},
    {U'g', 0x306, 0x11F},
    // dot above U+0307
    {U'Z', 0x307, 0x17B}, {U'z', 0x307, 0x17C}, {U'I', 0x307, 0x130},
    // diaeresis U+0308
    {U'A', 0x308, 0xC4},  {U'E', 0x308, 0xCB},  {U'I', 0x308, 0xCF},
    {U'O', 0x308, 0xD6},  {U'U', 0x308, 0xDC},  {U'a', 0x308, 0xE4},
    {U'e', 0x308, 0xEB},  {U'i', 0x308, 0xEF},  {U'o', 0x308, 0xF6},
    {U'u', 0x308, 0xFC},  {U'y', 0x308, 0xFF},
    // ring U+030A
    {U'A', 0x30A, 0xC5},  {U'a', 0x30A, 0xE5},  {U'U', 0x30A, 0x16E},
    {U'u', 0x30A, 0x16F},
    // double acute U+030B
    {U'O', 0x30B, 0x150}, {U'o', 0x30B, 0x151}, {U'U', 0x30B, 0x170},
    {U'u', 0x30B, 0x171},
    // caron U+030C
    {U'C', 0x30C, 0x10C}, {U'c', 0x30C, 0x10D}, {U'E', 0x30C, 0x11A},
    {U'e', 0x30C, 0x11B}, {U'R', 0x30C, 0x158}, {U'r', 0x30C, 0x159},
    {U'S', 0x30C, 0x160}, {U's', 0x30C, 0x161}, {U'Z', 0x30C, 0x17D},
    {U'z', 0x30C, 0x17E},
    // cedilla U+0327
    {U'C', 0x327, 0xC7},  {U'c', 0x327, 0xE7},  {U'S', 0x327, 0x15E},
    {U's', 0x327, 0x15F},
}};

char32_t compose(char32_t base, char32_t mark) {
  for (const auto& c : kCompositions)
    if (c.base == base && c.mark == mark) return c.composed;
  return 0;
}

}  // namespace

std::string nfc(std::string_view s) {
  auto cps = decode_utf8(s);
  std::vector<char32_t> out;
  out.reserve(cps.size());
  for (char32_t cp : cps) {
    if (!out.empty() && cp >= 0x300 && cp <= 0x36F) {
      if (char32_t comp = compose(out.back(), cp); comp != 0) {
        out.back() = comp;
        continue;
      }
    }
    out.push_back(cp);
  }
  return encode_utf8(out);
}

std::string clean_title(std::string_view s) {
  auto cps = decode_utf8(nfc(s));
  std::vector<char32_t> out;
  out.reserve(cps.size());
  bool pending_space = false;
  for (char32_t cp : cps) {
    if (is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(U' ');
      pending_space = false;
    }
    out.push_back(cp);
  }
  return encode_utf8(out);
}

}  // namespace ytlc::uni
