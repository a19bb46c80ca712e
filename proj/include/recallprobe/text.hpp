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

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Unicode helpers shared by every module. All strings are UTF-8.
namespace recallprobe::text {

bool is_valid_utf8(std::string_view s);

/// Canonical composed form (NFC).
std::string nfc(std::string_view s);

/// NFC, leading/trailing whitespace removed, inner whitespace runs collapsed
/// to a single ASCII space. Case is preserved.
std::string normalize(std::string_view s);

/// Equivalence key used for dedup and name matching: normalize() followed by
/// full Unicode case folding.
std::string fold_key(std::string_view s);

/// Number of code points.
std::size_t length(std::string_view s);

/// Splits on whitespace, punctuation and symbols, and between CJK and
/// non-CJK script runs. Apostrophes inside a word are kept ("Chen's").
/// Tokens are NFC, case preserved.
std::vector<std::string> tokenize(std::string_view s);

/// tokenize() then fold_key() on each token.
std::vector<std::string> folded_tokens(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string trim(std::string_view s);

}  // namespace recallprobe::text
