#include "unleak/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "unleak/errors.hpp"
#include "unleak/rng.hpp"

namespace unleak {

namespace {

const char* kWorkclass[] = {"private", "self_emp_not_inc", "self_emp_inc",
                            "local_gov", "state_gov", "federal_gov"};
const char* kMarital[] = {"married", "never_married", "divorced", "separated", "widowed"};
// Ordered roughly by the latent skill that drives them.
const char* kOccupation[] = {"handlers_cleaners", "other_service", "farming_fishing",
                             "machine_op_inspct", "transport_moving", "adm_clerical",
                             "craft_repair", "sales", "protective_serv", "tech_support",
                             "prof_specialty", "exec_managerial"};
const char* kRelationship[] = {"husband", "wife", "not_in_family", "own_child",
                               "unmarried", "other_relative"};
const char* kRace[] = {"white", "black", "asian_pac_islander", "amer_indian", "other"};
const char* kRegion[] = {"northeast", "midwest", "south", "west", "abroad"};

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

std::size_t pick_weighted(Rng& rng, std::initializer_list<double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double r = rng.next_unit() * total;
    std::size_t i = 0;
    for (double w : weights) {
        if (r < w) return i;
        r -= w;
        ++i;
    }
    return weights.size() - 1;
}

std::string num(double v) {
    return std::to_string(static_cast<long long>(std::llround(v)));
}

}  // namespace

RawTable synth_census(std::size_t rows, std::uint64_t seed) {
    if (rows == 0) throw DataError("row count must be positive");
    RawTable table;
    table.header = {"age",          "workclass",    "education_num", "marital_status",
                    "occupation",   "relationship", "race",          "sex",
                    "capital_gain", "capital_loss", "hours_per_week", "native_region",
                    "income"};
    table.rows.reserve(rows);

    Rng rng(seed);
    for (std::size_t r = 0; r < rows; ++r) {
        const double skill = rng.next_normal();
        const double age = clamp(std::round(38.0 + 12.0 * rng.next_normal()), 17.0, 80.0);
        const double edu = clamp(std::round(10.0 + 2.2 * skill + 1.2 * rng.next_normal()),
                                 1.0, 16.0);

        // Occupation follows the skill latently; bell-shaped category masses.
        const double occ_latent = skill + 0.8 * rng.next_normal();
        const auto occ = static_cast<std::size_t>(
            clamp(std::floor((occ_latent + 3.2) / 6.4 * 12.0), 0.0, 11.0));

        const std::size_t workclass =
            pick_weighted(rng, {0.70, 0.08, 0.03, 0.09, 0.06, 0.04});

        const double p_married = clamp(0.08 + (age - 17.0) * 0.016, 0.08, 0.68);
        std::size_t marital;
        if (rng.next_unit() < p_married)
            marital = 0;
        else
            marital = 1 + pick_weighted(rng, {age < 30 ? 0.85 : 0.45, 0.35, 0.10, 0.10});

        const bool male = rng.next_unit() < 0.67;

        std::size_t relationship;
        if (marital == 0)
            relationship = male ? 0 : 1;
        else if (marital == 1)
            relationship = age < 25 ? 3 : (rng.next_unit() < 0.7 ? 2 : 4);
        else
            relationship = pick_weighted(rng, {0.0, 0.0, 0.5, 0.05, 0.35, 0.10}) ;

        const std::size_t race = pick_weighted(rng, {0.78, 0.10, 0.05, 0.04, 0.03});
        const std::size_t region = pick_weighted(rng, {0.20, 0.24, 0.32, 0.20, 0.04});

        const double hours =
            clamp(std::round(40.0 + 5.0 * clamp(skill, -2.0, 2.0) + 9.0 * rng.next_normal()),
                  5.0, 99.0);

        double capital_gain = 0.0;
        if (rng.next_unit() < clamp(0.08 + 0.04 * skill, 0.01, 0.25))
            capital_gain = clamp(std::round(std::exp(7.4 + 0.8 * skill +
                                                     0.8 * rng.next_normal())),
                                 100.0, 99999.0);
        double capital_loss = 0.0;
        if (rng.next_unit() < 0.05)
            capital_loss = clamp(std::round(1500.0 + 400.0 * rng.next_normal()), 100.0, 4356.0);

        const double z = 1.6 * skill + 0.030 * (age - 38.0) -
                         0.00050 * (age - 38.0) * (age - 38.0) + 0.030 * (hours - 40.0) +
                         0.90 * (marital == 0 ? 1.0 : 0.0) + 0.55 * (male ? 1.0 : 0.0) +
                         1.30 * (capital_gain > 0.0 ? 1.0 : 0.0) +
                         0.35 * (edu >= 13.0 ? 1.0 : 0.0) + 1.8 * rng.next_normal();
        const bool high_income = z > 2.2;

        table.rows.push_back({num(age), kWorkclass[workclass], num(edu), kMarital[marital],
                              kOccupation[occ], kRelationship[relationship], kRace[race],
                              male ? "male" : "female", num(capital_gain), num(capital_loss),
                              num(hours), kRegion[region], high_income ? ">50K" : "<=50K"});
    }
    return table;
}

void write_csv(const RawTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    for (std::size_t c = 0; c < table.header.size(); ++c)
        out << (c ? "," : "") << table.header[c];
    out << "\n";
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
        out << "\n";
    }
}

}  // namespace unleak
