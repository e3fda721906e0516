#include "histent/text.hpp"

#include "histent/error.hpp"

namespace histent {

namespace {

struct Decoded {
  char32_t cp;
  std::size_t width;
};

Decoded decode_one(std::string_view s, std::size_t i) {
  auto fail = [i]() -> Decoded {
    throw Error(ErrorCode::MalformedInput,
                "invalid UTF-8 sequence at byte " + std::to_string(i));
  };
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return {b0, 1};
  std::size_t width = 0;
  char32_t cp = 0;
  char32_t min = 0;
  if ((b0 & 0xE0) == 0xC0) {
    width = 2, cp = b0 & 0x1F, min = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    width = 3, cp = b0 & 0x0F, min = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    width = 4, cp = b0 & 0x07, min = 0x10000;
  } else {
    return fail();
  }
  if (i + width > s.size()) return fail();
  for (std::size_t k = 1; k < width; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) return fail();
    cp = (cp << 6) | (b & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return fail();
  return {cp, width};
}

}  // namespace

std::u32string decode_utf8(std::string_view bytes) {
  std::u32string out;
  out.reserve(bytes.size());
  for (std::size_t i = 0; i < bytes.size();) {
    Decoded d = decode_one(bytes, i);
    out.push_back(d.cp);
    i += d.width;
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

std::string encode_utf8(std::u32string_view cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) append_utf8(out, cp);
  return out;
}

Utf8Index::Utf8Index(std::string_view bytes) {
  offsets_.reserve(bytes.size() + 1);
  std::size_t i = 0;
  while (i < bytes.size()) {
    offsets_.push_back(i);
    i += decode_one(bytes, i).width;
  }
  offsets_.push_back(i);
}

CharClass classify(char32_t cp) {
  if (cp < 0x80) {
    if (cp == ' ' || (cp >= '\t' && cp <= '\r')) return CharClass::Space;
    if ((cp >= '0' && cp <= '9') || (cp >= 'A' && cp <= 'Z') || (cp >= 'a' && cp <= 'z'))
      return CharClass::Word;
    return CharClass::Punct;
  }
  switch (cp) {
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000: case 0xFEFF:
      return CharClass::Space;
    case 0xAA: case 0xB2: case 0xB3: case 0xB5: case 0xB9: case 0xBA:
      return CharClass::Word;
    case 0xD7: case 0xF7:
      return CharClass::Punct;
    default:
      break;
  }
  if (cp >= 0x2000 && cp <= 0x200A) return CharClass::Space;
  if (cp >= 0xA1 && cp <= 0xBF) return CharClass::Punct;
  if (cp >= 0x2010 && cp <= 0x2027) return CharClass::Punct;
  if (cp >= 0x2030 && cp <= 0x205E) return CharClass::Punct;
  if (cp >= 0x20A0 && cp <= 0x20CF) return CharClass::Punct;
  if (cp >= 0x2190 && cp <= 0x2BFF) return CharClass::Punct;
  if (cp >= 0x3001 && cp <= 0x3003) return CharClass::Punct;
  if (cp >= 0xFF01 && cp <= 0xFF0F) return CharClass::Punct;
  return CharClass::Word;
}

}  // namespace histent
