#include "monoflow/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace monoflow {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string summarize(const std::vector<std::string>& issues) {
    std::string msg = "invalid configuration (" + std::to_string(issues.size()) + " issue";
    msg += issues.size() == 1 ? ")" : "s)";
    for (const auto& i : issues) msg += "\n  " + i;
    return msg;
}

bool valid_name(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    });
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : std::runtime_error(summarize(issues)), issues_(std::move(issues)) {}

Config Config::parse(std::istream& is) {
    Config cfg;
    std::vector<std::string> issues;
    std::string line;
    int lineno = 0;
    Section* current = nullptr;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        const std::string where = "line " + std::to_string(lineno);
        if (t.front() == '[') {
            if (t.back() != ']' || !valid_name(trim(t.substr(1, t.size() - 2)))) {
                issues.push_back(where + ": malformed section header '" + t + "'");
                current = nullptr;
                continue;
            }
            const std::string name = trim(t.substr(1, t.size() - 2));
            if (cfg.has_section(name)) issues.push_back(where + ": section [" + name + "] repeated");
            cfg.sections_.push_back({name, {}});
            current = &cfg.sections_.back();
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            issues.push_back(where + ": expected 'key = value', got '" + t + "'");
            continue;
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (!current) {
            issues.push_back(where + ": key '" + key + "' outside any section");
            continue;
        }
        if (!valid_name(key)) {
            issues.push_back(where + ": invalid key '" + key + "'");
            continue;
        }
        const bool dup = std::any_of(current->entries.begin(), current->entries.end(),
                                     [&](const Entry& e) { return e.first == key; });
        if (dup) {
            issues.push_back(where + ": " + current->name + "." + key + " given twice");
            continue;
        }
        current->entries.emplace_back(key, value);
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return cfg;
}

Config Config::parse_string(const std::string& text) {
    std::istringstream is(text);
    return parse(is);
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
    return parse(in);
}

void Config::write(std::ostream& os) const {
    bool first = true;
    for (const auto& s : sections_) {
        if (!first) os << '\n';
        first = false;
        os << '[' << s.name << "]\n";
        for (const auto& [k, v] : s.entries) os << k << " = " << v << '\n';
    }
}

std::string Config::to_string() const {
    std::ostringstream os;
    write(os);
    return os.str();
}

std::optional<std::string> Config::get(const std::string& section, const std::string& key) const {
    for (const auto& s : sections_) {
        if (s.name != section) continue;
        for (const auto& [k, v] : s.entries)
            if (k == key) return v;
    }
    return std::nullopt;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
    auto it = std::find_if(sections_.begin(), sections_.end(), [&](const Section& s) { return s.name == section; });
    if (it == sections_.end()) {
        sections_.push_back({section, {}});
        it = std::prev(sections_.end());
    }
    for (auto& e : it->entries) {
        if (e.first == key) {
            e.second = value;
            return;
        }
    }
    it->entries.emplace_back(key, value);
}

bool Config::has_section(const std::string& section) const {
    return std::any_of(sections_.begin(), sections_.end(), [&](const Section& s) { return s.name == section; });
}

std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::optional<double> parse_double(const std::string& text) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size() || t.empty()) return std::nullopt;
    return v;
}

std::optional<long long> parse_int(const std::string& text) {
    const std::string t = trim(text);
    long long v = 0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size() || t.empty()) return std::nullopt;
    return v;
}

std::optional<unsigned long long> parse_u64(const std::string& text) {
    const std::string t = trim(text);
    unsigned long long v = 0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size() || t.empty()) return std::nullopt;
    return v;
}

std::optional<bool> parse_bool(const std::string& text) {
    const std::string t = trim(text);
    if (t == "true" || t == "yes" || t == "1") return true;
    if (t == "false" || t == "no" || t == "0") return false;
    return std::nullopt;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    if (trim(text).empty()) return out;
    std::string item;
    std::istringstream is(text);
    while (std::getline(is, item, ',')) out.push_back(trim(item));
    return out;
}

std::string join_list(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += items[i];
    }
    return out;
}

}  // namespace monoflow
