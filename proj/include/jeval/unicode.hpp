#pragma once

// Minimal Unicode support for a Latin-script (French) corpus: UTF-8
// transcoding, canonical composition of combining diacritics onto Latin
// bases (the NFC cases that occur in French and neighboring languages),
// simple lowercasing for ASCII/Latin-1/Latin Extended-A, and the character
// classes used by the tokenizer. Unmapped codepoints pass through
// unchanged, which keeps every transform deterministic and idempotent.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace jeval {

inline constexpr char32_t kReplacementChar = 0xFFFD;

// Decodes one codepoint starting at i and advances i. Malformed input
// yields U+FFFD and advances one byte.
inline char32_t utf8_decode(std::string_view s, std::size_t& i) {
  auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  unsigned char b0 = byte(i);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return kReplacementChar;
  }
  if (i + len > s.size()) {
    ++i;
    return kReplacementChar;
  }
  for (int k = 1; k < len; ++k) {
    unsigned char bk = byte(i + k);
    if ((bk & 0xC0) != 0x80) {
      ++i;
      return kReplacementChar;
    }
    cp = (cp << 6) | (bk & 0x3F);
  }
  // Reject overlong forms and surrogates.
  if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
      (len == 4 && cp < 0x10000) || (cp >= 0xD800 && cp <= 0xDFFF) ||
      cp > 0x10FFFF) {
    ++i;
    return kReplacementChar;
  }
  i += len;
  return cp;
}

inline void utf8_encode(char32_t cp, std::string& out) {
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

inline std::vector<char32_t> utf8_to_codepoints(std::string_view s) {
  std::vector<char32_t> cps;
  cps.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) cps.push_back(utf8_decode(s, i));
  return cps;
}

inline std::string codepoints_to_utf8(const std::vector<char32_t>& cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) utf8_encode(cp, out);
  return out;
}

inline std::size_t codepoint_count(std::string_view s) {
  std::size_t n = 0, i = 0;
  while (i < s.size()) {
    utf8_decode(s, i);
    ++n;
  }
  return n;
}

// Precomposed form for (base, combining mark), or 0 when none is defined.
inline char32_t compose_latin(char32_t base, char32_t mark) {
  auto pick = [&](std::string_view bases, const char32_t* composed) -> char32_t {
    for (std::size_t k = 0; k < bases.size(); ++k)
      if (static_cast<char32_t>(bases[k]) == base) return composed[k];
    return 0;
  };
  switch (mark) {
    case 0x0300: {  // grave
      static constexpr char32_t m[] = {0xC0, 0xC8, 0xCC, 0xD2, 0xD9,
                                       0xE0, 0xE8, 0xEC, 0xF2, 0xF9};
      return pick("AEIOUaeiou", m);
    }
    case 0x0301: {  // acute
      static constexpr char32_t m[] = {0xC1, 0xC9, 0xCD, 0xD3, 0xDA, 0xDD,
                                       0xE1, 0xE9, 0xED, 0xF3, 0xFA, 0xFD};
      return pick("AEIOUYaeiouy", m);
    }
    case 0x0302: {  // circumflex
      static constexpr char32_t m[] = {0xC2, 0xCA, 0xCE, 0xD4, 0xDB,
                                       0xE2, 0xEA, 0xEE, 0xF4, 0xFB};
      return pick("AEIOUaeiou", m);
    }
    case 0x0303: {  // tilde
      static constexpr char32_t m[] = {0xC3, 0xD1, 0xD5, 0xE3, 0xF1, 0xF5};
      return pick("ANOano", m);
    }
    case 0x0308: {  // diaeresis
      static constexpr char32_t m[] = {0xC4,  0xCB, 0xCF, 0xD6, 0xDC, 0x178,
                                       0xE4,  0xEB, 0xEF, 0xF6, 0xFC, 0xFF};
      return pick("AEIOUYaeiouy", m);
    }
    case 0x0327: {  // cedilla
      static constexpr char32_t m[] = {0xC7, 0xE7};
      return pick("Cc", m);
    }
    default:
      return 0;
  }
}

inline bool is_combining_mark(char32_t cp) { return cp >= 0x0300 && cp <= 0x036F; }

// Canonical composition over the Latin table above; other sequences are
// left untouched. Idempotent.
inline std::string nfc(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    char32_t cp = utf8_decode(s, i);
    if (is_combining_mark(cp) && !out.empty()) {
      char32_t composed = compose_latin(out.back(), cp);
      if (composed != 0) {
        out.back() = composed;
        continue;
      }
    }
    out.push_back(cp);
  }
  return codepoints_to_utf8(out);
}

inline char32_t to_lower_cp(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  if (cp == 0x130) return 'i';   // dotted capital I
  if (cp == 0x178) return 0xFF;  // Y with diaeresis
  if ((cp >= 0x100 && cp <= 0x137) || (cp >= 0x14A && cp <= 0x177))
    return (cp % 2 == 0) ? cp + 1 : cp;
  if (cp >= 0x139 && cp <= 0x148) return (cp % 2 == 1) ? cp + 1 : cp;
  if (cp >= 0x179 && cp <= 0x17E) return (cp % 2 == 1) ? cp + 1 : cp;
  return cp;
}

inline bool is_letter_cp(char32_t cp) {
  if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z')) return true;
  if (cp >= 0xC0 && cp <= 0x24F && cp != 0xD7 && cp != 0xF7) return true;
  if (is_combining_mark(cp)) return true;  // keeps runs intact after nfc
  return false;
}

inline bool is_digit_cp(char32_t cp) { return cp >= '0' && cp <= '9'; }

inline bool is_word_cp(char32_t cp) { return is_letter_cp(cp) || is_digit_cp(cp); }

inline bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

inline std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_ascii_space(s[b])) ++b;
  while (e > b && is_ascii_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

}  // namespace jeval
