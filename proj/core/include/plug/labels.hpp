#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace plug {

// Closed label inventory. Ids follow descending training frequency, ties
// broken by string order, so id 0 is always the most frequent label.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> names) : names_(std::move(names)) { reindex(); }

  static LabelSet from_counts(const std::map<std::string, long>& counts) {
    std::vector<std::pair<std::string, long>> items(counts.begin(), counts.end());
    std::stable_sort(items.begin(), items.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> names;
    for (auto& [n, c] : items) names.push_back(n);
    return LabelSet(std::move(names));
  }

  int size() const { return static_cast<int>(names_.size()); }
  bool empty() const { return names_.empty(); }
  const std::string& name(int id) const { return names_.at(static_cast<size_t>(id)); }
  const std::vector<std::string>& names() const { return names_; }
  // -1 when unknown.
  int id(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
  }
  bool operator==(const LabelSet& o) const { return names_ == o.names_; }

 private:
  void reindex() {
    index_.clear();
    for (size_t i = 0; i < names_.size(); ++i) index_.emplace(names_[i], static_cast<int>(i));
  }
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace plug
