#pragma once

#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace mggm::cli {

using json = nlohmann::json;

enum class OptType { Int, Real, Text, IntList, RealList, Flag };

struct OptionSpec {
    std::string key;  // JSON key; the flag is --key with '_' replaced by '-'
    OptType type;
    json fallback;    // null means "unset"
    std::string help;
    bool hashed = true;
};

/// Options of one subcommand, bound to CLI11 as raw strings and resolved
/// into one JSON object: defaults, then the config file, then flags.
class CommandConfig {
public:
    CommandConfig(CLI::App* sub, std::vector<OptionSpec> specs);

    json resolve() const;
    /// FNV-1a of the hashed keys of the resolved config, 16 hex digits.
    static std::string spec_hash(const json& resolved, const std::vector<OptionSpec>& specs);
    const std::vector<OptionSpec>& specs() const { return specs_; }

private:
    CLI::App* sub_;
    std::vector<OptionSpec> specs_;
    std::map<std::string, std::string> raw_;
    std::map<std::string, bool> flags_;
    std::string config_file_;
};

json parse_value(const OptionSpec& spec, const std::string& text);
json check_value(const OptionSpec& spec, const json& value);

std::string flag_name(const std::string& key);

} // namespace mggm::cli
