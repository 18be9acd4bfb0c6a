#include "cli_config.hpp"

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <sstream>

#include "mggm/error.hpp"
#include "mggm/io.hpp"

namespace mggm::cli {

std::string flag_name(const std::string& key) {
    std::string f = key;
    for (char& c : f) {
        if (c == '_') c = '-';
    }
    return "--" + f;
}

namespace {

std::vector<std::string> split(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) {
            fail(ErrorCode::ConfigError, "empty list element in '" + text + "'");
        }
        out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

json number(const OptionSpec& spec, const std::string& s, bool integer) {
    std::size_t used = 0;
    try {
        if (integer) {
            if (!s.empty() && s[0] == '-') {
                throw std::invalid_argument("negative");
            }
            const unsigned long long v = std::stoull(s, &used);
            if (used == s.size()) return json(static_cast<std::uint64_t>(v));
        } else {
            const double v = std::stod(s, &used);
            if (used == s.size()) return json(v);
        }
    } catch (const std::exception&) {
    }
    fail(ErrorCode::ConfigError, "bad value '" + s + "' for " + spec.key);
}

} // namespace

json parse_value(const OptionSpec& spec, const std::string& text) {
    switch (spec.type) {
    case OptType::Int: return number(spec, text, true);
    case OptType::Real: return number(spec, text, false);
    case OptType::Text: return json(text);
    case OptType::Flag: return json(true);
    case OptType::IntList:
    case OptType::RealList: {
        json arr = json::array();
        for (const auto& s : split(text)) {
            arr.push_back(number(spec, s, spec.type == OptType::IntList));
        }
        return arr;
    }
    }
    return json();
}

json check_value(const OptionSpec& spec, const json& v) {
    auto bad = [&]() -> json {
        fail(ErrorCode::ConfigError, "config value for '" + spec.key + "' has the wrong type");
    };
    auto is_count = [](const json& x) {
        return x.is_number_unsigned() || (x.is_number_integer() && x.get<std::int64_t>() >= 0);
    };
    if (v.is_null()) return v;
    switch (spec.type) {
    case OptType::Int:
        return is_count(v) ? json(v.get<std::uint64_t>()) : bad();
    case OptType::Real:
        return v.is_number() ? json(v.get<double>()) : bad();
    case OptType::Text:
        if (v.is_string()) return v;
        // Numbers are accepted for text options such as gamma.
        if (v.is_number()) return json(v.dump());
        return bad();
    case OptType::Flag:
        return v.is_boolean() ? v : bad();
    case OptType::IntList:
    case OptType::RealList: {
        const json arr = v.is_array() ? v : json::array({v});
        json out = json::array();
        for (const auto& x : arr) {
            if (spec.type == OptType::IntList) {
                out.push_back(is_count(x) ? json(x.get<std::uint64_t>()) : bad());
            } else {
                out.push_back(x.is_number() ? json(x.get<double>()) : bad());
            }
        }
        return out;
    }
    }
    return v;
}

CommandConfig::CommandConfig(CLI::App* sub, std::vector<OptionSpec> specs)
    : sub_(sub), specs_(std::move(specs)) {
    sub_->add_option("--config", config_file_, "JSON config file; flags override its values");
    for (const auto& s : specs_) {
        if (s.type == OptType::Flag) {
            sub_->add_flag(flag_name(s.key), flags_[s.key], s.help);
        } else {
            std::string help = s.help;
            if (!s.fallback.is_null()) {
                help += " (default " + s.fallback.dump() + ")";
            }
            sub_->add_option(flag_name(s.key), raw_[s.key], help);
        }
    }
}

json CommandConfig::resolve() const {
    json out = json::object();
    for (const auto& s : specs_) {
        out[s.key] = s.fallback;
    }
    if (!config_file_.empty()) {
        json file;
        try {
            file = json::parse(io::read_text(config_file_));
        } catch (const json::exception& e) {
            fail(ErrorCode::ConfigError, "cannot parse config file: " + std::string(e.what()));
        }
        if (!file.is_object()) {
            fail(ErrorCode::ConfigError, "config file must hold a JSON object");
        }
        for (const auto& [key, value] : file.items()) {
            const auto it = std::find_if(specs_.begin(), specs_.end(),
                                         [&](const OptionSpec& s) { return s.key == key; });
            if (it == specs_.end()) {
                fail(ErrorCode::ConfigError, "unknown config key '" + key + "'");
            }
            out[key] = check_value(*it, value);
        }
    }
    for (const auto& s : specs_) {
        if (sub_->count(flag_name(s.key)) == 0) {
            continue;
        }
        out[s.key] = s.type == OptType::Flag ? json(true) : parse_value(s, raw_.at(s.key));
    }
    return out;
}

std::string CommandConfig::spec_hash(const json& resolved, const std::vector<OptionSpec>& specs) {
    json h = json::object();
    for (const auto& s : specs) {
        if (s.hashed) {
            h[s.key] = resolved.at(s.key);
        }
    }
    std::uint64_t x = 1469598103934665603ull;
    for (unsigned char c : h.dump()) {
        x ^= c;
        x *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << x;
    return os.str();
}

} // namespace mggm::cli
