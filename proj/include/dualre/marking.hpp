#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualre/instance.hpp"
#include "dualre/schema.hpp"
#include "dualre/vocab.hpp"

namespace dualre {

/// [CLS] ... [SEP] with the subject wrapped in [SUB:t]..[/SUB:t] and the
/// object in [OBJ:t]..[/OBJ:t].
struct MarkedSequence {
  std::vector<int> ids;
  std::size_t sub_start_pos = 0;  // index of [SUB:t_s]
  std::size_t obj_start_pos = 0;  // index of [OBJ:t_o]
  bool truncated = false;

  friend bool operator==(const MarkedSequence&, const MarkedSequence&) = default;
};

// Word-id range [begin, end) inside an unmarked id sequence.
struct IdSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Core marking over ids. Spans must be non-empty and disjoint; markers are
// inserted in text order. When the result exceeds max_len, a window of
// max_len - 2 ids centred on the two marked spans is kept.
MarkedSequence mark_ids(std::span<const int> ids, IdSpan subject, IdSpan object, std::string_view subject_type,
                        std::string_view object_type, const Vocab& vocab, std::size_t max_len);

// Marks an instance's text. Each source token is tokenized on its own so
// mention ranges stay exact.
MarkedSequence mark_input(std::span<const std::string> tokens, const Mention& subject, const Mention& object,
                          const Vocab& vocab, std::size_t max_len);

// Marks a filled description using the slot offsets recorded by fill_template.
MarkedSequence mark_description(const FilledDescription& filled, std::string_view subject_type,
                                std::string_view object_type, const Vocab& vocab, std::size_t max_len);

// Drops [CLS], [SEP] and every marker id.
std::vector<int> strip_markers(const MarkedSequence& seq, const Vocab& vocab);

}  // namespace dualre
