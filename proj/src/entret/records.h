// Copyright 2026 The Entret Authors.
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

// Raw knowledge-base and document records as they appear on disk.

#ifndef ENTRET_RECORDS_H_
#define ENTRET_RECORDS_H_

#include <cstdint>
#include <string>
#include <vector>

namespace entret {

struct EntityRecord {
  std::string id;
  std::string title;
  std::string paragraph;  // first paragraph of the entity's page
  std::vector<std::string> categories;

  bool operator==(const EntityRecord &) const = default;
};

// Half-open token range [begin, end).
struct TokenRange {
  uint32_t begin = 0;
  uint32_t end = 0;

  bool operator==(const TokenRange &) const = default;
};

// A linked mention span inside a document.
struct Anchor {
  uint32_t start = 0;
  uint32_t end = 0;
  std::string entity_id;

  bool operator==(const Anchor &) const = default;
};

// Pre-tokenized document with explicit sentence segmentation.
struct AnnotatedDocument {
  std::string doc_id;
  std::vector<std::string> tokens;
  std::vector<TokenRange> sentences;
  std::vector<Anchor> anchors;

  bool operator==(const AnnotatedDocument &) const = default;
};

}  // namespace entret

#endif  // ENTRET_RECORDS_H_
