#include "dualre/marking.hpp"

#include <algorithm>

#include "dualre/error.hpp"

namespace dualre {

MarkedSequence mark_ids(std::span<const int> ids, IdSpan subject, IdSpan object, std::string_view subject_type,
                        std::string_view object_type, const Vocab& vocab, std::size_t max_len) {
  const std::size_t n = ids.size();
  if (subject.begin >= subject.end || subject.end > n || object.begin >= object.end || object.end > n)
    throw InputError("mark: span out of range for " + std::to_string(n) + " tokens");
  if (subject.begin < object.end && object.begin < subject.end) throw InputError("mark: subject and object overlap");

  const int sub_open = vocab.marker(MarkerKind::SubjectStart, subject_type);
  const int sub_close = vocab.marker(MarkerKind::SubjectEnd, subject_type);
  const int obj_open = vocab.marker(MarkerKind::ObjectStart, object_type);
  const int obj_close = vocab.marker(MarkerKind::ObjectEnd, object_type);

  std::vector<int> seq;
  seq.reserve(n + 4);
  std::size_t sub_pos = 0, obj_pos = 0, sub_last = 0, obj_last = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == subject.begin) {
      sub_pos = seq.size();
      seq.push_back(sub_open);
    }
    if (i == object.begin) {
      obj_pos = seq.size();
      seq.push_back(obj_open);
    }
    seq.push_back(ids[i]);
    if (i + 1 == subject.end) {
      sub_last = seq.size();
      seq.push_back(sub_close);
    }
    if (i + 1 == object.end) {
      obj_last = seq.size();
      seq.push_back(obj_close);
    }
  }

  MarkedSequence out;
  std::size_t start = 0, width = seq.size();
  if (seq.size() + 2 > max_len) {
    const std::size_t lo = std::min(sub_pos, obj_pos);
    const std::size_t hi = std::max(sub_last, obj_last) + 1;
    if (max_len < 2 || hi - lo > max_len - 2)
      throw InputError("mark: marked spans need " + std::to_string(hi - lo + 2) + " tokens but max_len is " +
                       std::to_string(max_len));
    width = max_len - 2;
    const std::size_t slack = width - (hi - lo);
    start = lo > slack / 2 ? lo - slack / 2 : 0;
    start = std::min(start, seq.size() - width);
    out.truncated = true;
  }
  out.ids.reserve(width + 2);
  out.ids.push_back(Vocab::cls_id());
  out.ids.insert(out.ids.end(), seq.begin() + static_cast<std::ptrdiff_t>(start),
                 seq.begin() + static_cast<std::ptrdiff_t>(start + width));
  out.ids.push_back(Vocab::sep_id());
  out.sub_start_pos = sub_pos - start + 1;
  out.obj_start_pos = obj_pos - start + 1;
  return out;
}

MarkedSequence mark_input(std::span<const std::string> tokens, const Mention& subject, const Mention& object,
                          const Vocab& vocab, std::size_t max_len) {
  for (const Mention* m : {&subject, &object})
    if (m->start >= m->end || m->end > tokens.size())
      throw InputError("mark_input: mention [" + std::to_string(m->start) + ", " + std::to_string(m->end) +
                       ") out of range for " + std::to_string(tokens.size()) + " tokens");
  if (subject.start < object.end && object.start < subject.end)
    throw InputError("mark_input: subject and object mentions overlap");

  std::vector<int> ids;
  std::vector<std::size_t> offset(tokens.size() + 1, 0);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    offset[i] = ids.size();
    auto words = split_words(tokens[i]);
    if (words.empty()) throw InputError("mark_input: token " + std::to_string(i) + " is blank");
    for (const auto& w : words) ids.push_back(vocab.id(w));
  }
  offset[tokens.size()] = ids.size();
  return mark_ids(ids, {offset[subject.start], offset[subject.end]}, {offset[object.start], offset[object.end]},
                  subject.type, object.type, vocab, max_len);
}

MarkedSequence mark_description(const FilledDescription& filled, std::string_view subject_type,
                                std::string_view object_type, const Vocab& vocab, std::size_t max_len) {
  const auto& text = filled.text;
  const bool subject_first = filled.subject.begin < filled.object.begin;
  const CharRange first = subject_first ? filled.subject : filled.object;
  const CharRange second = subject_first ? filled.object : filled.subject;
  if (first.begin > first.end || first.end > second.begin || second.begin > second.end || second.end > text.size())
    throw InputError("mark_description: slot offsets are inconsistent with the text");

  std::vector<int> ids;
  auto append = [&](std::size_t b, std::size_t e) {
    for (const auto& w : split_words(std::string_view(text).substr(b, e - b))) ids.push_back(vocab.id(w));
  };
  append(0, first.begin);
  IdSpan r1{ids.size(), 0};
  append(first.begin, first.end);
  r1.end = ids.size();
  append(first.end, second.begin);
  IdSpan r2{ids.size(), 0};
  append(second.begin, second.end);
  r2.end = ids.size();
  append(second.end, text.size());
  if (r1.begin == r1.end || r2.begin == r2.end) throw InputError("mark_description: an inserted span is empty");

  return mark_ids(ids, subject_first ? r1 : r2, subject_first ? r2 : r1, subject_type, object_type, vocab, max_len);
}

std::vector<int> strip_markers(const MarkedSequence& seq, const Vocab& vocab) {
  std::vector<int> out;
  for (int id : seq.ids)
    if (id != Vocab::cls_id() && id != Vocab::sep_id() && !vocab.is_marker(id)) out.push_back(id);
  return out;
}

}  // namespace dualre
