#pragma once

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace polar {

inline const std::string kUnknownToken = "<unk>";

// Token inventory persisted as a sorted text file, one token per line.
// Ids are line numbers; lookups of unseen tokens hit the reserved unknown.
class Vocab {
 public:
  static Vocab build(const std::vector<std::string>& tokens) {
    std::vector<std::string> uniq(tokens);
    uniq.push_back(kUnknownToken);
    for (const std::string& t : uniq) validate_token(t);
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    return Vocab(std::move(uniq));
  }

  int id(const std::string& tok) const {
    auto it = index_.find(tok);
    return it == index_.end() ? unk_id_ : it->second;
  }

  bool contains(const std::string& tok) const { return index_.count(tok) > 0; }
  int size() const { return static_cast<int>(tokens_.size()); }
  int unk_id() const { return unk_id_; }

  const std::string& token(int id) const {
    if (id < 0 || id >= size()) throw std::out_of_range("Vocab: id " + std::to_string(id));
    return tokens_[static_cast<size_t>(id)];
  }

  const std::vector<std::string>& tokens() const { return tokens_; }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("Vocab: cannot write " + path);
    for (const std::string& t : tokens_) out << t << '\n';
  }

  static Vocab load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("Vocab: cannot read " + path);
    std::vector<std::string> toks;
    std::string line;
    while (std::getline(in, line)) {
      validate_token(line);
      if (!toks.empty() && !(toks.back() < line))
        throw std::runtime_error("Vocab: file " + path + " not sorted/unique at '" + line + "'");
      toks.push_back(line);
    }
    Vocab v(std::move(toks));
    if (v.index_.find(kUnknownToken) == v.index_.end())
      throw std::runtime_error("Vocab: file " + path + " lacks the reserved " + kUnknownToken + " entry");
    return v;
  }

 private:
  explicit Vocab(std::vector<std::string> sorted) : tokens_(std::move(sorted)) {
    for (size_t i = 0; i < tokens_.size(); ++i) index_[tokens_[i]] = static_cast<int>(i);
    auto it = index_.find(kUnknownToken);
    unk_id_ = it == index_.end() ? -1 : it->second;
  }

  static void validate_token(const std::string& t) {
    if (t.empty()) throw std::invalid_argument("Vocab: empty token");
    for (char c : t)
      if (c == '\n' || c == '\r' || c == ' ' || c == '\t')
        throw std::invalid_argument("Vocab: token '" + t + "' contains whitespace");
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int unk_id_ = -1;
};

}  // namespace polar
