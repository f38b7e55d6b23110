#ifndef GPH_LABELS_HPP
#define GPH_LABELS_HPP

#include "gph/errors.hpp"
#include "gph/types.hpp"

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace gph {

/// Ground-truth semantic labels per item. Single-class data is the case of
/// singleton sets. Labels are interned into a vocabulary and each item
/// keeps its label indices sorted.
class LabelSet {
public:
  LabelSet() = default;

  /// Adds an item; rejects duplicate ids and empty label lists.
  void add(ItemId id, const std::vector<std::string> &labels) {
    if (index_.contains(id)) {
      throw UsageError("duplicate label entry for id " + std::to_string(id));
    }
    if (labels.empty()) {
      throw UsageError("empty label set for id " + std::to_string(id));
    }
    std::vector<int> set;
    set.reserve(labels.size());
    for (const auto &name : labels) {
      if (name.empty()) {
        throw UsageError("empty label name for id " + std::to_string(id));
      }
      set.push_back(intern(name));
    }
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    index_.emplace(id, ids_.size());
    ids_.push_back(id);
    sets_.push_back(std::move(set));
  }

  /// Single-class labels; ids default to 0..n-1.
  static LabelSet from_classes(std::span<const int> classes,
                               std::span<const ItemId> ids = {}) {
    LabelSet out;
    for (std::size_t i = 0; i < classes.size(); ++i) {
      out.add(ids.empty() ? static_cast<ItemId>(i) : ids[i],
              {std::to_string(classes[i])});
    }
    return out;
  }

  [[nodiscard]] std::size_t size() const { return ids_.size(); }
  [[nodiscard]] bool empty() const { return ids_.empty(); }
  [[nodiscard]] std::span<const ItemId> ids() const { return ids_; }
  [[nodiscard]] const std::vector<std::string> &vocabulary() const { return vocab_; }
  [[nodiscard]] std::span<const int> labels_at(std::size_t pos) const { return sets_[pos]; }

  [[nodiscard]] std::optional<std::size_t> position_of(ItemId id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) {
      return std::nullopt;
    }
    return it->second;
  }

  /// Label sets reordered to follow `ids`; every id must be present.
  [[nodiscard]] LabelSet aligned_to(std::span<const ItemId> ids) const {
    LabelSet out;
    out.vocab_ = vocab_;
    out.vocab_index_ = vocab_index_;
    for (const ItemId id : ids) {
      const auto pos = position_of(id);
      if (!pos) {
        throw UsageError("no labels for item id " + std::to_string(id));
      }
      if (out.index_.contains(id)) {
        throw UsageError("duplicate item id " + std::to_string(id));
      }
      out.index_.emplace(id, out.ids_.size());
      out.ids_.push_back(id);
      out.sets_.push_back(sets_[*pos]);
    }
    return out;
  }

  /// True iff the two items share at least one label.
  [[nodiscard]] bool share_label(std::size_t a, std::size_t b) const {
    const auto &x = sets_[a];
    const auto &y = sets_[b];
    auto i = x.begin();
    auto j = y.begin();
    while (i != x.end() && j != y.end()) {
      if (*i == *j) {
        return true;
      }
      if (*i < *j) {
        ++i;
      } else {
        ++j;
      }
    }
    return false;
  }

private:
  int intern(const std::string &name) {
    const auto it = vocab_index_.find(name);
    if (it != vocab_index_.end()) {
      return it->second;
    }
    const int next = static_cast<int>(vocab_.size());
    vocab_.push_back(name);
    vocab_index_.emplace(name, next);
    return next;
  }

  std::vector<ItemId> ids_;
  std::vector<std::vector<int>> sets_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> vocab_index_;
  std::unordered_map<ItemId, std::size_t> index_;
};

/// Semantic relevance: label sets intersect.
inline bool relevant(std::size_t a, std::size_t b, const LabelSet &labels) {
  return labels.share_label(a, b);
}

} // namespace gph

#endif // GPH_LABELS_HPP
