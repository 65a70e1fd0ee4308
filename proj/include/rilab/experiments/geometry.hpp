#pragma once
//
// Window experiments on the vacant set: sampler equivalence, I_{K,n}
// connectivity and rerouting, the trifurcation census and its counting
// audit, the isoperimetric table, and plain dumps.
//

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rilab/experiments/common.hpp"
#include "rilab/stats.hpp"
#include "rilab/vacancy.hpp"

namespace rilab::experiments {

/// Per-site occupancy frequencies of the trace and structured samplers.
template <int D>
ResultRecord trace_vs_structured(const ExperimentConfig& c) {
    ResultRecord rec{c};
    const auto k = parse_single_k<D>(c);
    const Box<D> w(origin<D>(), c.window);
    require_interior(k, w);
    const auto table = potential_for(k, c);
    const WindowSource<D> src(w, GreenTable<D>::shared());
    const WalkEngine<D> engine(w);
    const StructuredSampler<D> sampler(table, src, engine, c.tolerance_cap);
    const std::size_t n = w.size();

    struct Part {
        std::vector<std::uint64_t> trace, structured;
        std::uint64_t flips = 0;
    };
    auto parts = run_blocks<Part>(c.replicas, [&](std::uint64_t b, std::uint64_t e) {
        Part p{std::vector<std::uint64_t>(n, 0), std::vector<std::uint64_t>(n, 0)};
        for (auto r = b; r < e; ++r) {
            auto rt = Rng::stream(c.seed, r, 0);
            TraceStats ts;
            auto f = sample_trace(src, c.u, engine, rt, &ts);
            auto rs = Rng::stream(c.seed, r, 1);
            auto s = sampler.sample(c.u, rs);
            auto g = s.trace();
            for (std::size_t i = 0; i < n; ++i) {
                p.trace[i] += f.test(i);
                p.structured[i] += g.test(i);
            }
            p.flips += ts.flips + s.flips;
        }
        return p;
    });
    std::vector<std::uint64_t> a(n, 0), b(n, 0);
    std::uint64_t flips = 0;
    for (const auto& p : parts) {
        for (std::size_t i = 0; i < n; ++i) {
            a[i] += p.trace[i];
            b[i] += p.structured[i];
        }
        flips += p.flips;
    }
    const double m = double(c.replicas);
    const double sys = 2 * src.intensity_error() + flips / (2 * m) * engine.flip_error_per_flip();
    std::size_t outside = 0;
    double max_z = 0, mean_diff = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double pa = double(a[i]) / m, pb = double(b[i]) / m;
        const double se = std::sqrt((pa * (1 - pa) + pb * (1 - pb)) / m);
        const double z = se > 0 ? (pa - pb) / se : (pa == pb ? 0.0 : INFINITY);
        max_z = std::max(max_z, std::abs(z));
        if (!(std::abs(pa - pb) <= 3 * se)) ++outside;
        mean_diff += (pa - pb) / double(n);
        rec.rows.push_back({{"site", to_string(w.site(i))}, {"trace", pa}, {"structured", pb}, {"se", se}, {"z", z}});
    }
    rec.budget.add("window_equilibrium", 2 * src.intensity_error());
    rec.budget.add("far_flip_heuristic", flips / (2 * m) * engine.flip_error_per_flip());
    Estimate e{"mean occupancy difference", mean_diff, 0.0, sys};
    e.extra["sites"] = n;
    e.extra["sites_outside_3se"] = outside;
    e.extra["expected_outside_under_equivalence"] = double(n) * std::erfc(3 / std::sqrt(2.0));
    e.extra["max_abs_z"] = max_z;
    rec.estimates.push_back(e);
    rec.checks["every site within 3 SE"] = outside == 0;
    return rec;
}

/// Per-sample data shared by the connectivity and rerouting experiments.
struct ConnectivityRun {
    std::vector<int> radii;
    std::uint64_t samples = 0;
    std::vector<std::uint64_t> connected;     // per K' radius
    std::vector<std::uint64_t> nonmonotone;   // samples connected at a radius but not at a larger one
    std::vector<std::uint64_t> rerouted;      // samples where rerouting ran
    std::vector<std::uint64_t> reroute_equal; // rerouted field == I_{K,n}
    std::vector<std::uint64_t> nested;        // vacant components of I^u nested in the output
    std::uint64_t eligible = 0;               // >= 2 boundary-contact vacant components near K
    std::uint64_t merged = 0;                 // ... of which rerouting strictly reduced the count
    std::uint64_t with_pairs = 0;
    std::uint64_t pairs = 0;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();

    void absorb(const ConnectivityRun& o) {
        samples += o.samples;
        for (std::size_t i = 0; i < radii.size(); ++i) {
            connected[i] += o.connected[i];
            nonmonotone[i] += o.nonmonotone[i];
            rerouted[i] += o.rerouted[i];
            reroute_equal[i] += o.reroute_equal[i];
            nested[i] += o.nested[i];
        }
        eligible += o.eligible;
        merged += o.merged;
        with_pairs += o.with_pairs;
        pairs += o.pairs;
        for (const auto& r : o.rows) rows.push_back(r);
    }
};

/// Boundary-contact vacant components that meet K or a neighbour of K.
template <int D>
std::size_t contact_components_near(const ComponentLabeling<D>& lab, const FiniteSet<D>& near) {
    std::vector<std::int32_t> seen;
    for (const auto& x : near) {
        auto l = lab.at(x);
        if (l >= 0 && lab.boundary_contact[l] && std::find(seen.begin(), seen.end(), l) == seen.end()) seen.push_back(l);
    }
    return seen.size();
}

template <int D>
ConnectivityRun connectivity_run(const ExperimentConfig& c) {
    const auto k = parse_single_k<D>(c);
    const Box<D> w(origin<D>(), c.window);
    require_interior(k, w);
    if (c.kprime.back() > c.window)
        throw ConfigError("the largest K' radius (" + std::to_string(c.kprime.back()) + ") exceeds the window radius");
    const auto table = potential_for(k, c);
    for (int r : c.kprime)
        for (const auto& x : k)
            if (!Box<D>(table.center(), r).contains(x)) throw ConfigError("K' of radius " + std::to_string(r) + " misses K");
    const WindowSource<D> src(w, GreenTable<D>::shared());
    const WalkEngine<D> engine(w);
    const StructuredSampler<D> sampler(table, src, engine, c.tolerance_cap);
    std::vector<Site<D>> near_v(k.begin(), k.end());
    for (const auto& x : k)
        for (const auto& y : Lattice<D>::neighbors(x)) near_v.push_back(y);
    const FiniteSet<D> near(std::move(near_v));
    const std::size_t nr = c.kprime.size();
    auto empty = [&] {
        ConnectivityRun run;
        run.radii = c.kprime;
        for (auto* v : {&run.connected, &run.nonmonotone, &run.rerouted, &run.reroute_equal, &run.nested})
            v->assign(nr, 0);
        return run;
    };

    auto parts = run_blocks<ConnectivityRun>(c.replicas, [&](std::uint64_t b, std::uint64_t e) {
        ConnectivityRun p = empty();
        for (auto r = b; r < e; ++r) {
            auto rng = Rng::stream(c.seed, r);
            auto s = sampler.sample(c.u, rng);
            s.seed = c.seed;
            s.replica = r;
            const auto dec = decompose(s);
            const auto trace = s.trace();
            ++p.samples;
            p.pairs += s.n();
            p.with_pairs += s.n() > 0;
            nlohmann::ordered_json row{{"replica", r}, {"n", s.n()}};
            bool prev = false;
            int largest_ok = -1;
            for (std::size_t i = 0; i < nr; ++i) {
                const Box<D> kp(table.center(), c.kprime[i]);
                auto per_pair = check_IKn_connectivity(dec, kp);
                const bool ok = std::all_of(per_pair.begin(), per_pair.end(), [](bool v) { return v; });
                p.connected[i] += ok;
                if (prev && !ok) ++p.nonmonotone[i];
                prev = ok;
                row["connected_r" + std::to_string(c.kprime[i])] = ok;
                if (!ok) continue;
                largest_ok = int(i);
                auto out = reroute_bridges(dec, kp);
                ++p.rerouted[i];
                p.reroute_equal[i] += out == dec.ikn;
                p.nested[i] += vacant_components_nested(trace, out);
            }
            if (largest_ok >= 0 && s.n() > 0) {
                auto before = components(trace, Phase::vacant);
                if (contact_components_near(before, near) >= 2) {
                    ++p.eligible;
                    auto out = reroute_bridges(dec, Box<D>(table.center(), c.kprime[std::size_t(largest_ok)]));
                    auto after = components(out, Phase::vacant);
                    const bool fewer = after.contact_count() < before.contact_count();
                    p.merged += fewer;
                    row["eligible"] = true;
                    row["merged"] = fewer;
                }
            }
            p.rows.push_back(std::move(row));
        }
        return p;
    });
    ConnectivityRun run = empty();
    for (const auto& p : parts) run.absorb(p);
    return run;
}

template <int D>
ResultRecord ikn_connectivity(const ExperimentConfig& c) {
    ResultRecord rec{c};
    auto run = connectivity_run<D>(c);
    bool monotone = true;
    for (std::size_t i = 0; i < run.radii.size(); ++i) {
        auto pr = proportion(run.connected[i], run.samples);
        Estimate e{"connected fraction r=" + std::to_string(run.radii[i]), pr.value, pr.se, 0.0};
        e.extra["samples_losing_connectivity"] = run.nonmonotone[i];
        rec.estimates.push_back(e);
        if (i && run.connected[i] < run.connected[i - 1]) monotone = false;
        if (run.nonmonotone[i]) monotone = false;
    }
    rec.budget.add("sampler_truncation", 0.0);
    rec.checks["nondecreasing in K' radius"] = monotone;
    rec.checks["fraction >= 0.99 at the largest radius"] =
        double(run.connected.back()) >= 0.99 * double(run.samples);
    rec.details["samples"] = run.samples;
    rec.details["samples_with_pairs"] = run.with_pairs;
    rec.details["pairs"] = run.pairs;
    rec.rows = std::move(run.rows);
    return rec;
}

template <int D>
ResultRecord reroute_merge(const ExperimentConfig& c) {
    ResultRecord rec{c};
    auto run = connectivity_run<D>(c);
    bool equal = true, nested = true;
    for (std::size_t i = 0; i < run.radii.size(); ++i) {
        const auto tag = " r=" + std::to_string(run.radii[i]);
        Estimate e{"rerouted samples" + tag, double(run.rerouted[i]), 0.0, 0.0};
        e.extra["equal_to_IKn"] = run.reroute_equal[i];
        e.extra["components_nested"] = run.nested[i];
        rec.estimates.push_back(e);
        equal = equal && run.reroute_equal[i] == run.rerouted[i];
        nested = nested && run.nested[i] == run.rerouted[i];
    }
    const double freq = run.eligible ? double(run.merged) / double(run.eligible) : 0.0;
    Estimate m{"merge frequency", freq,
               run.eligible ? std::sqrt(freq * (1 - freq) / double(run.eligible)) : 0.0, 0.0};
    m.extra["eligible"] = run.eligible;
    m.extra["merged"] = run.merged;
    m.extra["eligibility"] = ">= 2 boundary-contact vacant components meeting K or its neighbours";
    rec.estimates.push_back(m);
    rec.budget.add("sampler_truncation", 0.0);
    rec.checks["rerouted field equals I_{K,n}"] = equal;
    rec.checks["vacant components nested"] = nested;
    rec.details["samples"] = run.samples;
    rec.rows = std::move(run.rows);
    return rec;
}

/// Census on trace fields, every reported site re-verified from scratch.
template <int D>
ResultRecord trifurcation_census(const ExperimentConfig& c) {
    ResultRecord rec{c};
    const Box<D> w(origin<D>(), c.window);
    const WindowSource<D> src(w, GreenTable<D>::shared());
    const WalkEngine<D> engine(w);
    struct Part {
        std::uint64_t reported = 0, verified = 0;
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    };
    auto parts = run_blocks<Part>(c.replicas, [&](std::uint64_t b, std::uint64_t e) {
        Part p;
        for (auto r = b; r < e; ++r) {
            auto rng = Rng::stream(c.seed, r);
            auto f = sample_trace(src, c.u, engine, rng);
            for (int t : c.t) {
                auto rep = detect_trifurcations(f, TrifurcationConfig{t, 0});
                std::uint64_t ok = 0;
                for (const auto& x : rep.sites) ok += verify_trifurcation<D>(f, x, t);
                p.reported += rep.sites.size();
                p.verified += ok;
                p.rows.push_back({{"replica", r},
                                  {"t", t},
                                  {"T", rep.sites.size()},
                                  {"verified", ok},
                                  {"W", rep.census_size()},
                                  {"density", rep.density()},
                                  {"prefilter_passed", rep.prefilter_passed},
                                  {"metric", "graph (L1)"}});
            }
        }
        return p;
    });
    std::uint64_t reported = 0, verified = 0;
    for (auto& p : parts) {
        reported += p.reported;
        verified += p.verified;
        for (auto& r : p.rows) rec.rows.push_back(std::move(r));
    }
    Estimate e{"reported trifurcations", double(reported), 0.0, 0.0};
    e.extra["verified"] = verified;
    rec.estimates.push_back(e);
    rec.budget.add("window_equilibrium", src.intensity_error());
    rec.checks["every reported site re-verified"] = verified == reported;
    return rec;
}

/// Census counts against the ball-multiplier bounds over nested windows.
template <int D>
ResultRecord bk_audit(const ExperimentConfig& c) {
    ResultRecord rec{c};
    auto windows = c.windows;
    std::sort(windows.begin(), windows.end());
    bool bounds = true;
    // (window, t) -> mean density and boundary ratio
    std::vector<std::vector<RunningStat>> density(windows.size(), std::vector<RunningStat>(c.t.size()));
    std::vector<std::vector<double>> ratio(windows.size(), std::vector<double>(c.t.size(), 0));
    for (std::size_t wi = 0; wi < windows.size(); ++wi) {
        const Box<D> w(origin<D>(), windows[wi]);
        const WindowSource<D> src(w, GreenTable<D>::shared());
        const WalkEngine<D> engine(w);
        struct Part {
            std::vector<BurtonKeaneAudit> audits;
            std::vector<std::uint64_t> replica;
        };
        auto parts = run_blocks<Part>(
            c.replicas,
            [&](std::uint64_t b, std::uint64_t e) {
                Part p;
                for (auto r = b; r < e; ++r) {
                    auto rng = Rng::stream(c.seed, r, std::uint64_t(windows[wi]));
                    auto f = sample_trace(src, c.u, engine, rng);
                    for (int t : c.t) {
                        p.audits.push_back(burton_keane_audit(detect_trifurcations(f, TrifurcationConfig{t, 0})));
                        p.replica.push_back(r);
                    }
                }
                return p;
            },
            worker_count(), 1);
        for (const auto& p : parts)
            for (std::size_t i = 0; i < p.audits.size(); ++i) {
                const auto& a = p.audits[i];
                const auto ti = std::size_t(std::find(c.t.begin(), c.t.end(), a.t) - c.t.begin());
                density[wi][ti].add(a.density());
                ratio[wi][ti] = a.boundary_ratio();
                bounds = bounds && a.separated_within_bound() && a.raw_within_bound();
                auto row = a.to_json();
                nlohmann::ordered_json out{{"seed", c.seed}, {"replica", p.replica[i]}, {"u", c.u},
                                           {"window", windows[wi]}, {"census_mode", "raw+separated"}};
                for (auto it = row.begin(); it != row.end(); ++it) out[it.key()] = it.value();
                out["separated_within_bound"] = a.separated_within_bound();
                out["raw_within_bound"] = a.raw_within_bound();
                rec.rows.push_back(std::move(out));
            }
    }
    bool decreasing = true;
    nlohmann::ordered_json table = nlohmann::ordered_json::array();
    for (std::size_t ti = 0; ti < c.t.size(); ++ti)
        for (std::size_t wi = 0; wi < windows.size(); ++wi) {
            const auto& d = density[wi][ti];
            Estimate e{"T/|W| window=" + std::to_string(windows[wi]) + " t=" + std::to_string(c.t[ti]), d.mean(), d.se(),
                       0.0};
            e.extra["boundary_ratio"] = ratio[wi][ti];
            rec.estimates.push_back(e);
            table.push_back({{"window", windows[wi]}, {"t", c.t[ti]}, {"density", d.mean()}, {"se", d.se()},
                             {"boundary_ratio", ratio[wi][ti]}});
            if (wi) {
                decreasing = decreasing && ratio[wi][ti] < ratio[wi - 1][ti];
                decreasing = decreasing && d.mean() <= density[wi - 1][ti].mean();
            }
        }
    rec.budget.add("window_equilibrium", 0.0);
    rec.details["table"] = table;
    rec.checks["separated census within multiplier |dW'| on every configuration"] = bounds;
    rec.checks["T/|W| and |dW|/|W| decrease with window size"] = decreasing;
    return rec;
}

/// |∂A|/|A| for boxes of the given sides, exact.
template <int D>
ResultRecord isoperimetry_table(const ExperimentConfig& c) {
    ResultRecord rec{c};
    auto sides = c.windows;
    std::sort(sides.begin(), sides.end());
    bool decreasing = true;
    double prev = INFINITY;
    for (int l : sides) {
        auto r = isoperimetric_ratio(parse_k_spec<D>("box:" + std::to_string(l)));
        rec.rows.push_back({{"side", l},
                            {"volume", r.volume},
                            {"boundary", r.boundary},
                            {"ratio_num", r.exact.num},
                            {"ratio_den", r.exact.den},
                            {"ratio", r.approx()}});
        rec.estimates.push_back({"ratio side=" + std::to_string(l), r.approx(), 0.0, 0.0});
        decreasing = decreasing && r.approx() < prev;
        prev = r.approx();
    }
    rec.budget.add("exact", 0.0);
    rec.checks["ratio strictly decreasing"] = decreasing;
    return rec;
}

template <int D>
ResultRecord potential_dump(const ExperimentConfig& c) {
    ResultRecord rec{c};
    const auto k = parse_single_k<D>(c);
    const auto table = potential_for(k, c);
    rec.details["potential"] = table.to_json();
    const auto cap = table.capacity();
    rec.estimates.push_back({"cap", cap.mid(), 0.0, cap.width() / 2});
    rec.budget.add("capacity_interval", cap.width() / 2);
    return rec;
}

/// Trace fields of replicas [0, replicas), in the configured dump format.
template <int D>
ResultRecord trace_dump(const ExperimentConfig& c) {
    ResultRecord rec{c};
    const Box<D> w(origin<D>(), c.window);
    const WindowSource<D> src(w, GreenTable<D>::shared());
    const WalkEngine<D> engine(w);
    auto fields = nlohmann::ordered_json::array();
    for (std::uint64_t r = 0; r < c.replicas; ++r) {
        auto rng = Rng::stream(c.seed, r);
        auto f = sample_trace(src, c.u, engine, rng);
        std::ostringstream os;
        if (c.field_format == "rle") write_field_rle(os, f, c.u, c.seed);
        else write_field_coords(os, f, c.u, c.seed);
        fields.push_back(os.str());
        rec.rows.push_back({{"replica", r}, {"occupied", f.count()}, {"sites", f.size()}});
    }
    rec.details["fields"] = fields;
    rec.budget.add("window_equilibrium", src.intensity_error());
    return rec;
}

template <int D>
ResultRecord structured_dump(const ExperimentConfig& c) {
    ResultRecord rec{c};
    const auto k = parse_single_k<D>(c);
    const Box<D> w(origin<D>(), c.window);
    require_interior(k, w);
    const auto table = potential_for(k, c);
    const WindowSource<D> src(w, GreenTable<D>::shared());
    const WalkEngine<D> engine(w);
    const StructuredSampler<D> sampler(table, src, engine, c.tolerance_cap);
    auto samples = nlohmann::ordered_json::array();
    for (std::uint64_t r = 0; r < c.replicas; ++r) {
        auto rng = Rng::stream(c.seed, r);
        auto s = sampler.sample(c.u, rng);
        s.seed = c.seed;
        s.replica = r;
        decompose(s); // checks the decomposition identity
        samples.push_back(s.to_json());
        rec.rows.push_back({{"replica", r}, {"n", s.n()}, {"background", s.background.size()}});
    }
    rec.details["samples"] = samples;
    rec.budget.add("window_equilibrium", src.intensity_error());
    return rec;
}

} // namespace rilab::experiments
