#ifndef BR_FRESH_HPP
#define BR_FRESH_HPP

#include <set>
#include <string>

#include "br/syntax.hpp"

namespace br {

// Session-local fresh type-variable supply. Names are `<prefix><counter>`;
// the counter is strictly increasing and names in the avoid set (the type
// variables free in the session's inputs) are skipped.
class FreshSupply {
 public:
  explicit FreshSupply(std::string prefix = "t", std::set<std::string> avoid = {})
      : prefix_(std::move(prefix)), avoid_(std::move(avoid)) {}

  void avoid(const std::set<std::string>& names) { avoid_.insert(names.begin(), names.end()); }
  void avoid(const std::string& name) { avoid_.insert(name); }

  std::string next() {
    for (;;) {
      std::string name = prefix_ + std::to_string(counter_++);
      if (!avoid_.count(name)) return name;
    }
  }
  Type fresh_type() { return Type::var(next()); }

  const std::string& prefix() const { return prefix_; }
  unsigned long counter() const { return counter_; }

 private:
  std::string prefix_;
  std::set<std::string> avoid_;
  unsigned long counter_ = 0;
};

}  // namespace br

#endif  // BR_FRESH_HPP
