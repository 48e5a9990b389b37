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

#include "entret/dataset.h"

namespace entret {

namespace {

Dataset Assemble(const EntityCatalog &catalog, const std::vector<AnnotatedDocument> &docs,
                 const DatasetOptions &options, uint64_t seed, const NgramVocabulary *vocab) {
  Dataset d;
  d.catalog = catalog;
  d.split = SplitExamples(ExtractMentions(docs, catalog), options.holdout_fraction, seed);
  if (vocab != nullptr) {
    d.vocab = *vocab;
  } else {
    std::vector<MentionFeatures> mentions;
    mentions.reserve(d.split.train.size());
    for (const MentionExample &ex : d.split.train) mentions.push_back(ex.features);
    std::vector<EntityFeatures> entities;
    entities.reserve(catalog.size());
    for (const EntityRecord &r : catalog.records()) entities.push_back(BuildEntityFeatures(r));
    d.vocab = BuildVocabulary(mentions, entities, options.max_vocab, options.oov_buckets);
  }
  for (const EntityRecord &r : catalog.records()) d.entity_ids.push_back(r.id);
  d.entities = EncodeCatalog(catalog, d.vocab, options.category_rows);
  d.train = EncodeExamples(d.split.train, catalog, d.vocab);
  d.heldout = EncodeExamples(d.split.heldout, catalog, d.vocab);
  return d;
}

}  // namespace

TrainingSet EncodeExamples(const std::vector<MentionExample> &examples, const EntityCatalog &catalog,
                           const NgramVocabulary &vocab) {
  TrainingSet set;
  set.mentions.reserve(examples.size());
  set.gold.reserve(examples.size());
  for (const MentionExample &ex : examples) {
    set.mentions.push_back(EncodeMention(ex.features, vocab));
    set.gold.push_back(static_cast<uint32_t>(catalog.IndexOf(ex.gold_entity_id)));
  }
  return set;
}

std::vector<EncodedEntity> EncodeCatalog(const EntityCatalog &catalog, const NgramVocabulary &vocab,
                                         uint64_t category_rows) {
  std::vector<EncodedEntity> out;
  out.reserve(catalog.size());
  for (const EntityRecord &r : catalog.records()) {
    out.push_back(EncodeEntity(BuildEntityFeatures(r), vocab, category_rows));
  }
  return out;
}

Dataset BuildDataset(const EntityCatalog &catalog, const std::vector<AnnotatedDocument> &docs,
                     const DatasetOptions &options, uint64_t seed) {
  return Assemble(catalog, docs, options, seed, nullptr);
}

Dataset BuildDataset(const EntityCatalog &catalog, const std::vector<AnnotatedDocument> &docs,
                     const DatasetOptions &options, uint64_t seed, const NgramVocabulary &vocab) {
  return Assemble(catalog, docs, options, seed, &vocab);
}

}  // namespace entret
