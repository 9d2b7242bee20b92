#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evidential/bitset.hpp"
#include "evidential/errors.hpp"

namespace evidential {

// Absolute tolerance for all real comparisons in contracts and tests.
inline constexpr double kEqualityTol = 1e-9;
// Masses below this magnitude are pruned after combinations; also the band
// within which a pseudo mass/commonality may dip negative.
inline constexpr double kPruneTol = 1e-12;

// Frame capacity in configurations. Overridable through EVIDENTIAL_CAPACITY.
inline std::size_t frame_capacity() {
    if (const char* env = std::getenv("EVIDENTIAL_CAPACITY")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return std::size_t{1} << 20;
}

// Prints a real with 12 significant digits, trailing zeros kept.
inline std::string format_real(double v) {
    if (v == 0.0) v = 0.0;  // normalize -0
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%#.12g", v);
    return buf;
}

inline bool valid_identifier(std::string_view s) {
    if (s.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

inline bool valid_value_label(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) continue;
        if (std::strchr("_-+.?!", c)) continue;
        return false;
    }
    return true;
}

// A named discrete variable with an ordered domain of distinct value labels.
struct Variable {
    std::string name;
    std::vector<std::string> domain;

    bool operator==(const Variable&) const = default;

    std::size_t value_index(std::string_view label) const {
        for (std::size_t i = 0; i < domain.size(); ++i)
            if (domain[i] == label) return i;
        throw ValidateError("value '" + std::string(label) + "' not in domain of variable '" +
                            name + "'");
    }

    bool has_value(std::string_view label) const {
        return std::find(domain.begin(), domain.end(), label) != domain.end();
    }
};

inline Variable make_variable(std::string name, std::vector<std::string> domain) {
    if (!valid_identifier(name))
        throw ValidateError("invalid variable name '" + name + "'");
    if (domain.empty())
        throw ValidateError("variable '" + name + "' has an empty domain");
    for (const auto& label : domain)
        if (!valid_value_label(label))
            throw ValidateError("invalid value label '" + label + "' for variable '" + name + "'");
    for (std::size_t i = 0; i < domain.size(); ++i)
        for (std::size_t j = i + 1; j < domain.size(); ++j)
            if (domain[i] == domain[j])
                throw ValidateError("duplicate value label '" + domain[i] + "' for variable '" +
                                    name + "'");
    return Variable{std::move(name), std::move(domain)};
}

// An ordered set of variables (canonical order: by name) spanning the frame
// Theta.A, the cross product of the member domains. Configurations of the
// frame are enumerated lexicographically by (variable name, domain index):
// the alphabetically first variable is the most significant digit.
class Scope {
public:
    Scope() : data_(empty_data()) {}

    static Scope of(std::vector<Variable> vars) {
        auto d = std::make_shared<Data>();
        std::sort(vars.begin(), vars.end(),
                  [](const Variable& a, const Variable& b) { return a.name < b.name; });
        for (std::size_t i = 0; i + 1 < vars.size(); ++i)
            if (vars[i].name == vars[i + 1].name)
                throw ValidateError("duplicate variable '" + vars[i].name + "' in scope");
        d->vars = std::move(vars);
        d->strides.assign(d->vars.size(), 1);
        std::size_t cap = frame_capacity();
        std::size_t frame = 1;
        for (std::size_t i = d->vars.size(); i-- > 0;) {
            d->strides[i] = frame;
            std::size_t dom = d->vars[i].domain.size();
            if (frame > cap / dom + 1 || frame * dom > cap)
                throw CapacityError("frame of scope exceeds capacity of " +
                                    std::to_string(cap) + " configurations");
            frame *= dom;
        }
        d->frame_size = frame;
        return Scope(std::move(d));
    }

    std::size_t var_count() const { return data_->vars.size(); }
    std::size_t frame_size() const { return data_->frame_size; }
    const std::vector<Variable>& variables() const { return data_->vars; }
    const Variable& variable(std::size_t i) const { return data_->vars[i]; }
    std::size_t stride(std::size_t i) const { return data_->strides[i]; }

    std::optional<std::size_t> index_of(std::string_view name) const {
        const auto& vs = data_->vars;
        auto it = std::lower_bound(vs.begin(), vs.end(), name,
                                   [](const Variable& v, std::string_view n) { return v.name < n; });
        if (it != vs.end() && it->name == name)
            return static_cast<std::size_t>(it - vs.begin());
        return std::nullopt;
    }

    const Variable& variable(std::string_view name) const {
        auto idx = index_of(name);
        if (!idx) throw ValidateError("variable '" + std::string(name) + "' not in scope");
        return data_->vars[*idx];
    }

    // Domain index of variable var_pos within configuration `config`.
    std::size_t digit(std::size_t config, std::size_t var_pos) const {
        return (config / data_->strides[var_pos]) % data_->vars[var_pos].domain.size();
    }

    bool contains(const Scope& other) const {
        for (const auto& v : other.variables()) {
            auto idx = index_of(v.name);
            if (!idx || data_->vars[*idx].domain != v.domain) return false;
        }
        return true;
    }

    bool operator==(const Scope& o) const {
        return data_ == o.data_ || data_->vars == o.data_->vars;
    }

    // Textual form of one configuration: (v1,v2,...); () for the empty scope.
    std::string config_label(std::size_t config) const {
        std::string out = "(";
        for (std::size_t i = 0; i < var_count(); ++i) {
            if (i) out += ',';
            out += data_->vars[i].domain[digit(config, i)];
        }
        out += ')';
        return out;
    }

    std::string describe() const {
        std::string out = "{";
        for (std::size_t i = 0; i < var_count(); ++i) {
            if (i) out += ',';
            out += data_->vars[i].name;
        }
        out += '}';
        return out;
    }

    // Configuration index from a full assignment of value labels.
    std::size_t config_index(const std::map<std::string, std::string>& assignment) const {
        if (assignment.size() != var_count())
            throw ValidateError("assignment does not cover scope " + describe());
        std::size_t idx = 0;
        for (std::size_t i = 0; i < var_count(); ++i) {
            const auto& v = data_->vars[i];
            auto it = assignment.find(v.name);
            if (it == assignment.end())
                throw ValidateError("assignment missing variable '" + v.name + "'");
            idx += v.value_index(it->second) * data_->strides[i];
        }
        return idx;
    }

private:
    struct Data {
        std::vector<Variable> vars;
        std::vector<std::size_t> strides;
        std::size_t frame_size = 1;
    };

    explicit Scope(std::shared_ptr<const Data> d) : data_(std::move(d)) {}

    static std::shared_ptr<const Data> empty_data() {
        static const std::shared_ptr<const Data> d = std::make_shared<Data>();
        return d;
    }

    std::shared_ptr<const Data> data_;
};

inline Scope scope_union(const Scope& a, const Scope& b) {
    std::vector<Variable> vars = a.variables();
    for (const auto& v : b.variables()) {
        auto idx = a.index_of(v.name);
        if (idx) {
            if (a.variable(*idx).domain != v.domain)
                throw ValidateError("scope mismatch: variable '" + v.name +
                                    "' has conflicting domains");
        } else {
            vars.push_back(v);
        }
    }
    return Scope::of(std::move(vars));
}

// Maps each configuration of `from` to its projection in `to` (to must be a
// sub-scope of from). Table is indexed by the `from` configuration.
inline std::vector<std::uint32_t> projection_table(const Scope& from, const Scope& to) {
    if (!from.contains(to))
        throw ValidateError("projection target " + to.describe() + " is not contained in " +
                            from.describe());
    std::size_t n = to.var_count();
    std::vector<std::size_t> from_pos(n), from_stride(n), dom(n), to_stride(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto idx = from.index_of(to.variable(i).name);
        from_pos[i] = *idx;
        from_stride[i] = from.stride(*idx);
        dom[i] = to.variable(i).domain.size();
        to_stride[i] = to.stride(i);
    }
    std::vector<std::uint32_t> table(from.frame_size());
    for (std::size_t c = 0; c < from.frame_size(); ++c) {
        std::size_t t = 0;
        for (std::size_t i = 0; i < n; ++i)
            t += ((c / from_stride[i]) % dom[i]) * to_stride[i];
        table[c] = static_cast<std::uint32_t>(t);
    }
    return table;
}

}  // namespace evidential
