#ifndef NEUCROWD_CONFIG_HPP_
#define NEUCROWD_CONFIG_HPP_

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "neucrowd/datagen.hpp"
#include "neucrowd/evaluation.hpp"
#include "neucrowd/trainer.hpp"

namespace neucrowd {

struct ResolvedConfig {
  RunConfig run;
  SynthConfig synth;
  EvalConfig eval;

  void validate() const;
};

// Every accepted key, in snapshot order.
std::vector<std::string> config_keys();

// Sets one key from its text form. Throws UsageError naming the key when
// the key is unknown or the value does not parse.
void set_config_value(ResolvedConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const ResolvedConfig& config, const std::string& key);

// Accepts "key = value" lines ('#' starts a comment) or a flat JSON object.
// Later keys win; values are applied on top of `base`.
ResolvedConfig parse_config_text(const std::string& text, ResolvedConfig base = {});
ResolvedConfig load_config(const std::filesystem::path& path, ResolvedConfig base = {});

// Applies "key=value" overrides after the file, then validates.
ResolvedConfig resolve_config(const std::filesystem::path* path,
                              const std::vector<std::pair<std::string, std::string>>& overrides);

// key=value snapshot that parses back to the same configuration.
std::string to_config_text(const ResolvedConfig& config);

}  // namespace neucrowd

#endif  // NEUCROWD_CONFIG_HPP_
