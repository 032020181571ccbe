#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace monoflow {

/// Raised with every problem found, not just the first.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> issues);
    const std::vector<std::string>& issues() const { return issues_; }

private:
    std::vector<std::string> issues_;
};

/// Flat key = value text grouped in [section] blocks. Order of sections and
/// keys is preserved so that serialization is stable.
class Config {
public:
    using Entry = std::pair<std::string, std::string>;
    struct Section {
        std::string name;
        std::vector<Entry> entries;

        bool operator==(const Section&) const = default;
    };

    static Config parse(std::istream& is);
    static Config parse_string(const std::string& text);
    static Config load(const std::string& path);

    void write(std::ostream& os) const;
    std::string to_string() const;

    std::optional<std::string> get(const std::string& section, const std::string& key) const;
    void set(const std::string& section, const std::string& key, const std::string& value);
    bool has_section(const std::string& section) const;
    const std::vector<Section>& sections() const { return sections_; }

    bool operator==(const Config&) const = default;

private:
    std::vector<Section> sections_;
};

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
std::optional<double> parse_double(const std::string& text);
std::optional<long long> parse_int(const std::string& text);
std::optional<unsigned long long> parse_u64(const std::string& text);
std::optional<bool> parse_bool(const std::string& text);

/// Comma-separated list, whitespace trimmed; empty text gives an empty list.
std::vector<std::string> split_list(const std::string& text);
std::string join_list(const std::vector<std::string>& items);

}  // namespace monoflow
