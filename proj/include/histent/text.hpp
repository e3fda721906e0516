#ifndef HISTENT_TEXT_HPP
#define HISTENT_TEXT_HPP

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace histent {

/// Decodes UTF-8 into code points. Throws Error(MalformedInput) on invalid
/// sequences, overlong encodings and surrogates.
std::u32string decode_utf8(std::string_view bytes);

void append_utf8(std::string& out, char32_t cp);
std::string encode_utf8(std::u32string_view cps);

/// Byte offset of every code point boundary in a UTF-8 string, so that code
/// point offsets (the unit used for entity spans) map to byte slices.
class Utf8Index {
 public:
  Utf8Index() : offsets_{0} {}
  explicit Utf8Index(std::string_view bytes);

  std::size_t size() const { return offsets_.size() - 1; }
  std::size_t byte_offset(std::size_t cp) const { return offsets_.at(cp); }

 private:
  std::vector<std::size_t> offsets_;
};

enum class CharClass { Space, Word, Punct };

/// Letters and digits are Word, whitespace is Space, everything else is
/// Punct. Outside ASCII the split is a fixed table of common whitespace and
/// punctuation blocks; any other code point counts as a letter.
CharClass classify(char32_t cp);

}  // namespace histent

#endif  // HISTENT_TEXT_HPP
