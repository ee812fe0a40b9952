// Named LHS/RHS records for every inequality check.
#pragma once

#include <map>
#include <string>
#include <vector>

namespace stablab::estimators {

struct CheckRecord {
    std::string name;
    std::string anchor;  // stable identifier of the inequality being checked
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
    bool pass = true;
    double threshold = 0.0;  // the bound ratio was compared against (0: none)
    std::map<std::string, double> params;
};

// ratio = lhs/rhs when rhs > 0; a vanishing rhs passes only when lhs is at
// rounding level of the supplied scale.
inline CheckRecord make_record(std::string name, std::string anchor, double lhs, double rhs,
                               double zero_scale = 1.0) {
    CheckRecord r;
    r.name = std::move(name);
    r.anchor = std::move(anchor);
    r.lhs = lhs;
    r.rhs = rhs;
    if (rhs > 0) {
        r.ratio = lhs / rhs;
    } else {
        r.ratio = 0.0;
        r.pass = lhs <= 1e-12 * zero_scale;
    }
    return r;
}

struct EstimateReport {
    std::vector<CheckRecord> rows;

    void add(CheckRecord r) { rows.push_back(std::move(r)); }
    const CheckRecord* find(const std::string& name) const {
        for (const auto& r : rows)
            if (r.name == name) return &r;
        return nullptr;
    }
    bool all_pass() const {
        for (const auto& r : rows)
            if (!r.pass) return false;
        return true;
    }
};

}  // namespace stablab::estimators
