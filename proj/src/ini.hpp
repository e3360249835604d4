// INI access on top of boost::property_tree with typed getters and
// rejection of unknown keys (typos would otherwise be silently ignored).
#ifndef PHONOPROBE_INI_HPP
#define PHONOPROBE_INI_HPP

#include <istream>
#include <set>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "phonoprobe/error.hpp"
#include "text.hpp"

namespace phonoprobe::ini {

using boost::property_tree::ptree;

inline ptree read(std::istream& in, const std::string& source) {
  ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorKind::parse, fmt::format("{}:{}: {}", source, e.line(), e.message()));
  }
  for (const auto& [name, section] : tree) {
    if (section.empty()) {
      throw Error(ErrorKind::parse,
                  fmt::format("{}: key '{}' appears outside any section", source, name));
    }
  }
  return tree;
}

class Section {
public:
  Section(const ptree* tree, std::string source, std::string name)
      : tree_(tree), source_(std::move(source)), name_(std::move(name)) {}

  bool present() const { return tree_ != nullptr; }
  const std::string& name() const { return name_; }

  bool has(const std::string& key) const {
    return tree_ && tree_->find(key) != tree_->not_found();
  }

  std::string raw(const std::string& key) {
    used_.insert(key);
    return tree_->find(key)->second.data();
  }

  std::string get_string(const std::string& key, const std::string& fallback) {
    return has(key) ? raw(key) : fallback;
  }

  std::string require_string(const std::string& key) {
    if (!has(key)) throw error(ErrorKind::validation, fmt::format("missing key '{}'", key));
    return raw(key);
  }

  template <class Int>
  Int get_int(const std::string& key, Int fallback) {
    if (!has(key)) return fallback;
    const auto v = text::parse_int<Int>(raw(key));
    if (!v) throw error(ErrorKind::parse, fmt::format("'{}' is not an integer", key));
    return *v;
  }

  double get_double(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const auto v = text::parse_double(raw(key));
    if (!v) throw error(ErrorKind::parse, fmt::format("'{}' is not a number", key));
    return *v;
  }

  bool get_bool(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto v = text::parse_bool(raw(key));
    if (!v) throw error(ErrorKind::parse, fmt::format("'{}' is not a boolean", key));
    return *v;
  }

  std::vector<std::string> get_list(const std::string& key, char sep,
                                    const std::vector<std::string>& fallback) {
    if (!has(key)) return fallback;
    std::vector<std::string> out;
    const auto value = raw(key);
    for (auto part : text::split(value, sep)) {
      part = text::trim(part);
      if (!part.empty()) out.emplace_back(part);
    }
    return out;
  }

  /// Call after reading: any key never asked for is an error.
  void finish() const {
    if (!tree_) return;
    for (const auto& [key, value] : *tree_) {
      if (!used_.count(key)) {
        throw error(ErrorKind::validation, fmt::format("unknown key '{}'", key));
      }
    }
  }

  Error error(ErrorKind kind, const std::string& what) const {
    return Error(kind, fmt::format("{}: [{}] {}", source_, name_, what));
  }

private:
  const ptree* tree_;
  std::string source_;
  std::string name_;
  std::set<std::string> used_;
};

inline Section section(const ptree& tree, const std::string& source, const std::string& name) {
  const auto it = tree.find(name);
  return Section(it == tree.not_found() ? nullptr : &it->second, source, name);
}

} // namespace phonoprobe::ini

#endif
