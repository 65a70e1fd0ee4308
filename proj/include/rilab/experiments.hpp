#pragma once
//
// run_experiment: validation, dimension dispatch, and output files.
//

#include <chrono>
#include <fstream>
#include <string>

#include "rilab/experiments/geometry.hpp"
#include "rilab/experiments/laws.hpp"
#include "rilab/harness.hpp"

namespace rilab {

namespace experiments {

template <int D>
ResultRecord run_typed(const ExperimentConfig& c) {
    const auto& e = c.experiment;
    if (e == "eq1-check") return eq1_check<D>(c);
    if (e == "poisson-check") return poisson_check<D>(c);
    if (e == "pair-law-check") return pair_law_check<D>(c);
    if (e == "lastvisit-check") return lastvisit_check<D>(c);
    if (e == "bridge-law-check") return bridge_law_check<D>(c);
    if (e == "trace-vs-structured") return trace_vs_structured<D>(c);
    if (e == "ikn-connectivity") return ikn_connectivity<D>(c);
    if (e == "reroute-merge") return reroute_merge<D>(c);
    if (e == "trifurcation-census") return trifurcation_census<D>(c);
    if (e == "bk-audit") return bk_audit<D>(c);
    if (e == "isoperimetry-table") return isoperimetry_table<D>(c);
    if (e == "oracle-check") return oracle_check<D>(c);
    if (e == "potential") return potential_dump<D>(c);
    if (e == "trace") return trace_dump<D>(c);
    if (e == "structured") return structured_dump<D>(c);
    throw ConfigError("unknown experiment '" + e + "'");
}

} // namespace experiments

/// Validates, runs, and fills the wall clock when `timing` is set.
inline ResultRecord run_experiment(const ExperimentConfig& c, bool timing = false) {
    validate(c);
    const auto t0 = std::chrono::steady_clock::now();
    ResultRecord rec;
    switch (c.dim) {
    case 3: rec = experiments::run_typed<3>(c); break;
    case 4: rec = experiments::run_typed<4>(c); break;
    case 5: rec = experiments::run_typed<5>(c); break;
    default: throw ConfigError("dim must be 3, 4 or 5");
    }
    rec.config = c;
    if (timing) rec.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

/// JSON to c.out (stdout when empty) and rows to c.csv when set.
inline void write_outputs(const ResultRecord& rec, std::ostream& fallback) {
    const auto text = rec.to_json().dump(2) + "\n";
    if (rec.config.out.empty()) {
        fallback << text;
    } else {
        std::ofstream os(rec.config.out, std::ios::binary);
        if (!os) throw ConfigError("cannot write '" + rec.config.out + "'");
        os << text;
    }
    if (!rec.config.csv.empty()) {
        std::ofstream os(rec.config.csv, std::ios::binary);
        if (!os) throw ConfigError("cannot write '" + rec.config.csv + "'");
        os << rows_to_csv(rec.rows);
    }
}

} // namespace rilab
