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

#ifndef ENTRET_DATASET_H_
#define ENTRET_DATASET_H_

#include <string>
#include <vector>

#include "entret/corpus.h"
#include "entret/features.h"
#include "entret/training.h"

namespace entret {

struct DatasetOptions {
  double holdout_fraction = 0.1;
  size_t max_vocab = 50000;
  uint64_t oov_buckets = 5000;
  uint64_t category_rows = 50000;
};

// A split corpus together with its vocabulary and id-level encodings.
struct Dataset {
  EntityCatalog catalog;
  CorpusSplit split;
  NgramVocabulary vocab{1};
  std::vector<std::string> entity_ids;
  std::vector<EncodedEntity> entities;
  TrainingSet train;
  TrainingSet heldout;
};

// Encodes examples against a vocabulary; gold ids must be in the catalog.
TrainingSet EncodeExamples(const std::vector<MentionExample> &examples, const EntityCatalog &catalog,
                           const NgramVocabulary &vocab);

std::vector<EncodedEntity> EncodeCatalog(const EntityCatalog &catalog, const NgramVocabulary &vocab,
                                         uint64_t category_rows);

// Splits, builds the vocabulary from training mentions plus the catalog and
// encodes everything.
Dataset BuildDataset(const EntityCatalog &catalog, const std::vector<AnnotatedDocument> &docs,
                     const DatasetOptions &options, uint64_t seed);

// Same, with an existing vocabulary (no rebuild).
Dataset BuildDataset(const EntityCatalog &catalog, const std::vector<AnnotatedDocument> &docs,
                     const DatasetOptions &options, uint64_t seed, const NgramVocabulary &vocab);

}  // namespace entret

#endif  // ENTRET_DATASET_H_
