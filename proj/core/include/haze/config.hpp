#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "haze/errors.hpp"

namespace haze::cli {

enum class KeyType { kInt, kDouble, kString, kBool };

struct KeySpec {
  std::string name;
  KeyType type;
  std::string default_value;
  std::string help;
};

// Flat key-value settings merged from defaults, a config file and flag
// overrides (highest precedence last). Every consumed key must be declared;
// unknown keys are rejected with the offending name.
class RunConfig {
 public:
  static const std::vector<KeySpec>& known_keys();
  static RunConfig defaults();

  // "key = value" lines; '#' and ';' start comments
  void load_file(const std::string& path);
  void set(const std::string& key, const std::string& value);

  bool is_known(const std::string& key) const;
  int geti(const std::string& key) const;
  std::int64_t geti64(const std::string& key) const;
  double getd(const std::string& key) const;
  std::string gets(const std::string& key) const;
  bool getb(const std::string& key) const;

 private:
  const KeySpec& spec_for(const std::string& key) const;
  std::map<std::string, std::string> values_;
};

}  // namespace haze::cli
