// Copyright 2026 The recallprobe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "recallprobe/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <stdexcept>

namespace recallprobe::text {

namespace {

const icu::Normalizer2& nfc_instance() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || n == nullptr) {
    throw std::runtime_error("ICU NFC normalizer unavailable");
  }
  return *n;
}

icu::UnicodeString to_nfc(const icu::UnicodeString& in) {
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString out = nfc_instance().normalize(in, status);
  if (U_FAILURE(status)) throw std::runtime_error("NFC normalization failed");
  return out;
}

std::string to_utf8(const icu::UnicodeString& s) {
  std::string out;
  s.toUTF8String(out);
  return out;
}

bool is_space(UChar32 c) { return u_isUWhiteSpace(c) || c == 0x200B || c == 0x3000; }

bool is_apostrophe(UChar32 c) { return c == U'\'' || c == 0x2019; }

bool is_word_char(UChar32 c) {
  return u_isalnum(c) || u_hasBinaryProperty(c, UCHAR_ALPHABETIC) ||
         (U_GET_GC_MASK(c) & U_GC_M_MASK) != 0;
}

enum class ScriptClass { kCjk, kOther, kNeutral };

ScriptClass script_class(UChar32 c) {
  UErrorCode status = U_ZERO_ERROR;
  UScriptCode sc = uscript_getScript(c, &status);
  if (U_FAILURE(status)) return ScriptClass::kOther;
  switch (sc) {
    case USCRIPT_HAN:
    case USCRIPT_HIRAGANA:
    case USCRIPT_KATAKANA:
    case USCRIPT_HANGUL:
      return ScriptClass::kCjk;
    case USCRIPT_COMMON:
    case USCRIPT_INHERITED:
      return ScriptClass::kNeutral;
    default:
      return ScriptClass::kOther;
  }
}

std::vector<UChar32> code_points(std::string_view s) {
  std::vector<UChar32> out;
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  const auto len = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < len) {
    UChar32 c;
    U8_NEXT(bytes, i, len, c);
    out.push_back(c < 0 ? 0xFFFD : c);
  }
  return out;
}

void append_utf8(std::string& out, UChar32 c) {
  char buf[4];
  int32_t n = 0;
  UBool err = false;
  U8_APPEND(reinterpret_cast<uint8_t*>(buf), n, 4, c, err);
  if (!err) out.append(buf, static_cast<std::size_t>(n));
}

}  // namespace

bool is_valid_utf8(std::string_view s) {
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  const auto len = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < len) {
    UChar32 c;
    U8_NEXT(bytes, i, len, c);
    if (c < 0) return false;
  }
  return true;
}

std::string nfc(std::string_view s) {
  return to_utf8(to_nfc(icu::UnicodeString::fromUTF8(
      icu::StringPiece(s.data(), static_cast<int32_t>(s.size())))));
}

std::string normalize(std::string_view s) {
  std::string composed = nfc(s);
  std::string out;
  bool pending_space = false;
  for (UChar32 c : code_points(composed)) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    append_utf8(out, c);
  }
  return out;
}

std::string fold_key(std::string_view s) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(normalize(s));
  u.foldCase(U_FOLD_CASE_DEFAULT);
  return to_utf8(to_nfc(u));
}

std::size_t length(std::string_view s) { return code_points(s).size(); }

std::vector<std::string> tokenize(std::string_view s) {
  const std::vector<UChar32> cps = code_points(nfc(s));
  std::vector<std::string> tokens;
  std::string current;
  ScriptClass current_class = ScriptClass::kNeutral;

  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
    current_class = ScriptClass::kNeutral;
  };

  for (std::size_t i = 0; i < cps.size(); ++i) {
    const UChar32 c = cps[i];
    if (is_apostrophe(c)) {
      const bool inner = !current.empty() && i + 1 < cps.size() && is_word_char(cps[i + 1]);
      if (inner) {
        append_utf8(current, c);
        continue;
      }
      flush();
      continue;
    }
    if (!is_word_char(c)) {
      flush();
      continue;
    }
    const ScriptClass cls = script_class(c);
    if (cls != ScriptClass::kNeutral && current_class != ScriptClass::kNeutral &&
        cls != current_class) {
      flush();
    }
    if (cls != ScriptClass::kNeutral) current_class = cls;
    append_utf8(current, c);
  }
  flush();
  return tokens;
}

std::vector<std::string> folded_tokens(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& t : tokenize(s)) out.push_back(fold_key(t));
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && static_cast<unsigned char>(s[b]) <= ' ') ++b;
  while (e > b && static_cast<unsigned char>(s[e - 1]) <= ' ') --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace recallprobe::text
