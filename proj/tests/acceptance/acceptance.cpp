// Acceptance run: one PASS/FAIL line per criterion. Uses the demo inputs at
// 400x400 and a shared on-disk index cache under --work-dir.

#include <CLI11.hpp>

#include <Eigen/SVD>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "oracles.hpp"
#include "patchstyle/cli.hpp"
#include "patchstyle/demo_images.hpp"
#include "patchstyle/index_cache.hpp"
#include "patchstyle/io.hpp"
#include "patchstyle/synthesis.hpp"
#include "support.hpp"

using namespace patchstyle;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct Context {
    fs::path work;
    fs::path content_path;
    fs::path style_path;
    PlanarImage content;
    PlanarImage style;
    SegmentationMask edge;
    std::unique_ptr<IndexCache> cache;
    double first_index_seconds = -1.0;
    int first_index_builds = 0;

    RunResult run(const SegmentationMask& mask, const SynthesisConfig& cfg, RunHooks hooks = {}) {
        hooks.indices = cache->provider();
        const int builds_before = cache->builds();
        RunResult r = run_style_transfer(content, style, mask, cfg, hooks);
        if (first_index_seconds < 0.0) {
            first_index_seconds = r.index_seconds;
            first_index_builds = cache->builds() - builds_before;
        }
        return r;
    }
};

double max_abs_diff(const PlanarImage& a, const PlanarImage& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

double mean_abs_diff(const PlanarImage& a, const PlanarImage& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) s += std::abs(a.data()[i] - b.data()[i]);
    return s / static_cast<double>(a.data().size());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Direct double loop over positions and pixels.
double naive_objective(const PlanarImage& x, const MatchSet& ms, double r) {
    const int n = ms.grid.patch_size;
    double total = 0.0;
    for (std::size_t i = 0; i < ms.grid.size(); ++i) {
        const Origin o = ms.grid.positions[i];
        double sq = 0.0;
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < n; ++y)
                for (int xx = 0; xx < n; ++xx) {
                    const double e = x.at(c, o.row + y, o.col + xx) - ms.matches[i].patch.values[(c * n + y) * n + xx];
                    sq += e * e;
                }
        total += std::pow(std::sqrt(sq), r);
    }
    return total;
}

// Matches drawn from real texture patches at random origins.
MatchSet texture_matches(const SampleGrid& grid, const PlanarImage& source, std::mt19937_64& rng) {
    const int n = grid.patch_size;
    std::uniform_int_distribution<int> row(0, source.height() - n), col(0, source.width() - n);
    MatchSet ms;
    ms.grid = grid;
    ms.irls_weights.assign(grid.size(), 1.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Origin o{row(rng), col(rng)};
        ms.matches.push_back({extract_patch(source, o, n), o, static_cast<int>(i), 0.0});
    }
    return ms;
}

// ---------------------------------------------------------------------------

Verdict irls_descent() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    const auto source = testsupport::smooth_texture(120, 120, 99);
    int violations = 0;
    double worst = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
        const int n = inst % 2 ? 13 : 9;
        const int d = std::uniform_int_distribution<int>(std::max(1, n / 3), n)(rng);
        const auto grid = make_grid(64, 64, n, d);
        const auto ms = texture_matches(grid, source, rng);
        const auto x0 = testsupport::random_image(64, 64, 500 + inst);
        // Iterate k is the k-iteration run; its objective is recounted directly.
        double prev = naive_objective(x0, ms, 0.8);
        for (int k = 1; k <= 10; ++k) {
            const double cur = naive_objective(irls_aggregate(x0, ms, 0.8, k, 1e-6), ms, 0.8);
            const double rise = (cur - prev) / prev;
            worst = std::max(worst, rise);
            if (rise > 1e-9) ++violations;
            prev = cur;
        }
    }
    const double secs = since(t0);
    return {violations == 0 && secs < 30.0,
            fmt("50 instances, %d increasing steps, largest relative step %+.2e, %.1f s", violations, worst, secs)};
}

Verdict r2_exactness() {
    std::mt19937_64 rng(7);
    double worst = 0.0;
    int cases = 0;
    for (int inst = 0; inst < 20; ++inst) {
        const int w = std::uniform_int_distribution<int>(20, 70)(rng);
        const int h = std::uniform_int_distribution<int>(20, 70)(rng);
        const int n = std::uniform_int_distribution<int>(3, std::min({w, h, 15}))(rng);
        const int d = std::uniform_int_distribution<int>(1, n)(rng);
        const auto grid = make_grid(w, h, n, d);
        MatchSet ms;
        ms.grid = grid;
        std::uniform_real_distribution<double> u(0.0, 255.0);
        for (const Origin& o : grid.positions) {
            Patch p{n, o, std::vector<double>(Patch::length(n))};
            for (double& v : p.values) v = u(rng);
            ms.matches.push_back({std::move(p), o, 0, 0.0});
        }
        ms.irls_weights.assign(grid.size(), 1.0);
        // Closed form: plain mean of every patch value landing on each pixel.
        PlanarImage sum(w, h);
        std::vector<int> cover(static_cast<std::size_t>(w) * h, 0);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const Origin o = grid.positions[i];
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x) {
                    ++cover[static_cast<std::size_t>(o.row + y) * w + o.col + x];
                    for (int c = 0; c < 3; ++c)
                        sum.at(c, o.row + y, o.col + x) += ms.matches[i].patch.values[(c * n + y) * n + x];
                }
        }
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) sum.at(c, y, x) /= cover[static_cast<std::size_t>(y) * w + x];
        const auto x0 = testsupport::random_image(w, h, 900 + inst);
        for (int iters : {1, 10}) {
            worst = std::max(worst, max_abs_diff(irls_aggregate(x0, ms, 2.0, iters, 1e-6), sum));
            ++cases;
        }
    }
    return {worst <= 1e-9, fmt("%d cases, max abs error %.2e", cases, worst)};
}

Verdict texture_reduction(Context& ctx) {
    SynthesisConfig cfg;
    PlanarImage last_aggregate;
    double fuse_change = 0.0;
    int fuse_stages = 0;
    RunHooks hooks;
    hooks.snapshots = [&](const SnapshotInfo& s, const PlanarImage& x) {
        if (s.stage == Stage::aggregate) last_aggregate = x;
        if (s.stage == Stage::fuse) {
            fuse_change = std::max(fuse_change, max_abs_diff(x, last_aggregate));
            ++fuse_stages;
        }
    };
    const auto res = ctx.run(constant_mask(400, 400, 0.0), cfg, hooks);
    const double to_style = histogram_distance(res.image, ctx.style);
    const double to_content = histogram_distance(res.image, ctx.content);
    save_png(ctx.work / "texture_alpha0.png", res.image);
    return {fuse_change == 0.0 && fuse_stages > 0 && to_style <= 0.15 && to_content > to_style,
            fmt("fusion changed %d stages by at most %.1g; histogram distance to style %.3f, to content %.3f",
                fuse_stages, fuse_change, to_style, to_content)};
}

Verdict content_limit(Context& ctx) {
    SynthesisConfig cfg;
    const auto cpyr = build_pyramid(match_histogram(ctx.content, ctx.style), cfg.l_max, cfg.patch_sizes.front());
    double last = -1.0, worst = 0.0;
    int fused = 0;
    RunHooks hooks;
    hooks.snapshots = [&](const SnapshotInfo& s, const PlanarImage& x) {
        if (s.stage != Stage::fuse) return;
        const double d = max_abs_diff(x, cpyr.level(s.level));
        worst = std::max(worst, d);
        if (s.level == 1) last = d;
        ++fused;
    };
    (void)ctx.run(constant_mask(400, 400, 1e6), cfg, hooks);
    return {last >= 0.0 && last <= 0.1,
            fmt("last fused image before the final pass is %.2e from the content (worst over %d fusions %.2e)",
                last, fused, worst)};
}

Verdict ann_quality(Context& ctx) {
    const auto spyr = build_pyramid(ctx.style, 2, 13);
    const auto cpyr = build_pyramid(ctx.content, 2, 13);
    const int n = 13;
    const auto t_build = Clock::now();
    const auto idx = build_index(spyr.level(2), n, IndexConfig{});
    const double build_s = since(t_build);
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> row(0, cpyr.level(2).height() - n), col(0, cpyr.level(2).width() - n);
    std::normal_distribution<double> noise(0.0, 25.0);
    const int queries = 1000;
    int within_105 = 0, within_12 = 0;
    double worst = 1.0, search_s = 0.0, brute_s = 0.0;
    for (int q = 0; q < queries; ++q) {
        // Noisy content patches, the kind of query synthesis issues.
        Patch p = extract_patch(cpyr.level(2), {row(rng), col(rng)}, n);
        for (double& v : p.values) v += noise(rng);
        auto t = Clock::now();
        const auto ann = query_nn(idx, p);
        search_s += since(t);
        t = Clock::now();
        const auto best = brute_force_nn(idx.db, p);
        brute_s += since(t);
        const double got = std::sqrt(patch_residual_sq(idx.db.style, ann.style_origin, n, p.values));
        const double ratio = best.distance > 0.0 ? got / best.distance : (got == 0.0 ? 1.0 : INFINITY);
        worst = std::max(worst, ratio);
        within_105 += ratio <= 1.05;
        within_12 += ratio <= 1.2;
    }
    const double runtime = build_s + search_s;
    return {within_105 >= 0.9 * queries && within_12 == queries && runtime < 60.0,
            fmt("%d patches, %d queries: %.1f%% within 1.05x, %.1f%% within 1.2x, worst %.3fx; "
                "build %.1f s, search %.2f s (brute force %.1f s)",
                idx.db.count(), queries, 100.0 * within_105 / queries, 100.0 * within_12 / queries, worst, build_s,
                search_s, brute_s)};
}

Verdict pca_energy(Context& ctx) {
    const auto spyr = build_pyramid(ctx.style, 3, 13);
    const auto& level = spyr.level(3);
    std::string detail;
    bool ok = true;
    for (int n : {5, 9, 13}) {
        DatabaseConfig dc;
        dc.pca_sample_cap = 1 << 30;
        const auto db = build_database(level, n, dc);
        const int D = 3 * n * n;
        const auto [scatter, mean] = oracle::patch_scatter(level, n);
        const auto eig = oracle::jacobi_eigen(scatter, D, 1e-12);
        const int k_oracle = oracle::minimal_k(eig.values, 0.95);
        double total = 0.0, kept = 0.0, kept_less = 0.0, total_lib = 0.0;
        for (int i = 0; i < D; ++i) total += std::max(eig.values[i], 0.0);
        for (int i = 0; i < db.reduced_dim(); ++i) kept += std::max(eig.values[i], 0.0);
        for (int i = 0; i + 1 < db.reduced_dim(); ++i) kept_less += std::max(eig.values[i], 0.0);
        for (double l : db.spectrum) total_lib += l;
        // Spectra agree once both are normalised to unit trace.
        double spec_err = 0.0;
        for (int i = 0; i < D; ++i) {
            spec_err = std::max(spec_err, std::abs(db.spectrum[i] / total_lib - std::max(eig.values[i], 0.0) / total));
        }
        const bool pass = db.reduced_dim() == k_oracle && kept / total >= 0.95 && kept_less / total < 0.95 &&
                          db.retained_energy() >= 0.95 && spec_err < 1e-9;
        ok = ok && pass;
        detail += fmt("%sn=%d D=%d M=%d k=%d (oracle %d) retained %.4f, spectrum err %.1e", detail.empty() ? "" : "; ",
                      n, D, db.count(), db.reduced_dim(), k_oracle, kept / total, spec_err);
    }
    return {ok, detail};
}

Verdict cli_runs(Context& ctx, bool& determinism_pass, std::string& determinism_detail, Verdict& perf) {
    const auto out = [&](const char* name) { return (ctx.work / name).string(); };
    const auto cli_run = [&](std::vector<std::string> args) {
        args.insert(args.begin(), "patchstyle");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream log;
        const auto opts = cli::parse_args(static_cast<int>(argv.size()), argv.data(), log);
        const auto t0 = Clock::now();
        const int code = cli::run(*opts, log, std::cerr);
        return std::make_pair(code, since(t0));
    };
    const std::vector<std::string> common{"--content", ctx.content_path.string(), "--style", ctx.style_path.string(),
                                          "--cache-dir", (ctx.work / "cache").string(), "--quiet"};
    auto with = [&](std::initializer_list<std::string> extra) {
        auto a = common;
        a.insert(a.end(), extra);
        return a;
    };

    const auto [code_a, secs_a] = cli_run(with({"--out", out("default_seed0.png"), "--threads", "1"}));
    const auto [code_b, secs_b] =
        cli_run({"--from-manifest", out("default_seed0.png") + ".manifest.json", "--out", out("replay.png"),
                 "--threads", "4", "--trace", out("trace.csv"), "--quiet"});
    const auto [code_c, secs_c] = cli_run(with({"--out", out("default_seed1.png"), "--seed", "1"}));
    (void)secs_b;
    (void)secs_c;
    if (code_a || code_b || code_c) {
        determinism_pass = false;
        determinism_detail = fmt("CLI exit codes %d %d %d", code_a, code_b, code_c);
        perf = {false, "default CLI run failed"};
        return {false, "no trace"};
    }

    const bool identical = slurp(out("default_seed0.png")) == slurp(out("replay.png"));
    const auto a = load_image(out("default_seed0.png"));
    const auto c = load_image(out("default_seed1.png"));
    int differ = 0;
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) {
            double m = 0.0;
            for (int ch = 0; ch < 3; ++ch) m = std::max(m, std::abs(a.at(ch, y, x) - c.at(ch, y, x)));
            differ += m >= 1.0;
        }
    const double frac = static_cast<double>(differ) / (a.width() * a.height());
    determinism_pass = identical && frac >= 0.01;
    determinism_detail = fmt("manifest replay with 1 vs 4 threads %s; seeds 0 and 1 differ at %.1f%% of pixels",
                             identical ? "byte-identical" : "DIFFERS", 100.0 * frac);

    std::ifstream mf(out("default_seed0.png") + ".manifest.json");
    const auto j = nlohmann::json::parse(mf);
    const double index_s = j.at("timings_seconds").at("index_build").get<double>();
    const double synth_s = j.at("timings_seconds").at("synthesis").get<double>();
    const int hits = j.at("index_cache").at("hits").get<int>();
    const int builds = j.at("index_cache").at("builds").get<int>();
    std::string cold = ctx.first_index_builds > 0
                           ? fmt("; cold index build in this session %.1f s for %d indices", ctx.first_index_seconds,
                                 ctx.first_index_builds)
                           : std::string("; cache was already warm");
    perf = {secs_a <= 60.0 && builds == 0,
            fmt("warm default run %.1f s (index load %.1f s, %d hits, %d builds; synthesis %.1f s)%s", secs_a, index_s,
                hits, builds, synth_s, cold.c_str())};

    // Trace shape, read back from the CSV.
    std::ifstream csv(out("trace.csv"));
    std::string line;
    std::getline(csv, line);
    std::map<std::tuple<int, int, int>, std::map<std::string, double>> blocks;
    std::vector<std::tuple<int, int, int>> order;
    while (std::getline(csv, line)) {
        std::stringstream ss(line);
        std::string f[5];
        for (auto& s : f) std::getline(ss, s, ',');
        const auto key = std::make_tuple(std::stoi(f[0]), std::stoi(f[1]), std::stoi(f[3]));
        if (!blocks.count(key)) order.push_back(key);
        blocks[key][f[2]] = std::stod(f[4]);
    }
    int bad_drop = 0, bad_rise = 0, checked_rise = 0;
    double min_drop = INFINITY;
    for (const auto& key : order) {
        auto& b = blocks[key];
        if (!b.count("match") || !b.count("aggregate")) {
            ++bad_drop;
            continue;
        }
        min_drop = std::min(min_drop, (b["match"] - b["aggregate"]) / b["match"]);
        if (!(b["aggregate"] < b["match"])) ++bad_drop;
        for (const char* st : {"fuse", "palette"}) {
            if (!b.count(st)) continue;
            ++checked_rise;
            if (b[st] < b["aggregate"]) ++bad_rise;
        }
    }
    return {!order.empty() && bad_drop == 0 && bad_rise == 0,
            fmt("%zu blocks: aggregation lowered energy in all but %d (smallest relative drop %.3f); "
                "%d fusion/palette checks, %d below the aggregate",
                order.size(), bad_drop, min_drop, checked_rise, bad_rise)};
}

Verdict palette_fidelity(Context& ctx) {
    SynthesisConfig cfg;
    const auto spyr = build_pyramid(ctx.style, cfg.l_max, cfg.patch_sizes.front());
    PlanarImage before;
    double worst = 0.0;
    int steps = 0, order_breaks = 0, min_distinct = 1 << 30;
    RunHooks hooks;
    hooks.snapshots = [&](const SnapshotInfo& s, const PlanarImage& x) {
        if (s.stage == Stage::fuse) before = x;
        if (s.stage != Stage::palette) return;
        ++steps;
        worst = std::max(worst, histogram_distance(x, spyr.level(s.level)));
        for (int c = 0; c < 3; ++c) {
            const auto in = before.plane(c);
            const auto out = x.plane(c);
            min_distinct = std::min(min_distinct, static_cast<int>(std::set<double>(in.begin(), in.end()).size()));
            std::vector<std::size_t> idx(in.size());
            std::iota(idx.begin(), idx.end(), 0);
            // Equal inputs may be split across outputs; only a strictly larger
            // input landing below a smaller one counts.
            std::sort(idx.begin(), idx.end(),
                      [&](auto i, auto j) { return in[i] != in[j] ? in[i] < in[j] : out[i] < out[j]; });
            for (std::size_t k = 1; k < idx.size(); ++k) order_breaks += out[idx[k]] < out[idx[k - 1]];
        }
    };
    (void)ctx.run(ctx.edge, cfg, hooks);
    return {steps > 0 && worst <= 0.1 && order_breaks == 0,
            fmt("%d palette steps, worst histogram distance %.4f, %d order inversions, fewest distinct inputs %d", steps,
                worst, order_breaks, min_distinct)};
}

Verdict segmentation_sanity() {
    const int size = 200;
    const double cx = 97.4, cy = 103.2, r = 55.0;
    PlanarImage img(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            int inside = 0;
            for (int sy = 0; sy < 4; ++sy)
                for (int sx = 0; sx < 4; ++sx) {
                    const double px = x + (sx + 0.5) / 4 - 0.5 - cx, py = y + (sy + 0.5) / 4 - 0.5 - cy;
                    inside += px * px + py * py < r * r;
                }
            for (int c = 0; c < 3; ++c) img.at(c, y, x) = 210.0 - 170.0 * inside / 16.0;
        }
    const EdgeMaskParams params;
    const auto mask = edge_mask(img, params);
    // Pixels whose tensor window or closing element reaches the rim belong to
    // the edge band, not to the background.
    const double band = params.window / 2 + params.closing_size / 2;
    int in_total = 0, in_marked = 0, out_total = 0, out_marked = 0;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double d = std::hypot(x - cx, y - cy);
            const bool marked = mask.at(y, x) > 0.0;
            if (d < r - 1.0) {
                ++in_total;
                in_marked += marked;
            } else if (d > r + band) {
                ++out_total;
                out_marked += marked;
            }
        }

    const auto tex = testsupport::random_image(48, 40, 3);
    const int window = 7, half = 3;
    const auto st = structure_tensor(tex, window);
    auto luma = [&](int y, int x) {
        y = std::clamp(y, 0, tex.height() - 1);
        x = std::clamp(x, 0, tex.width() - 1);
        return 0.299 * tex.at(0, y, x) + 0.587 * tex.at(1, y, x) + 0.114 * tex.at(2, y, x);
    };
    double svd_err = 0.0;
    for (int y0 = 0; y0 < tex.height(); ++y0)
        for (int x0 = 0; x0 < tex.width(); ++x0) {
            std::vector<std::pair<double, double>> rows;
            for (int y = y0 - half; y <= y0 + half; ++y)
                for (int x = x0 - half; x <= x0 + half; ++x) {
                    if (y < 0 || y >= tex.height() || x < 0 || x >= tex.width()) continue;
                    rows.emplace_back(0.5 * (luma(y, x + 1) - luma(y, x - 1)), 0.5 * (luma(y + 1, x) - luma(y - 1, x)));
                }
            Eigen::MatrixXd g(rows.size(), 2);
            for (std::size_t i = 0; i < rows.size(); ++i) g.row(i) << rows[i].first, rows[i].second;
            const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(g).singularValues();
            svd_err = std::max({svd_err, std::abs(st.s1.at(0, y0, x0) - sv[0]), std::abs(st.s2.at(0, y0, x0) - sv[1])});
        }
    const double fin = static_cast<double>(in_marked) / in_total;
    const double fout = static_cast<double>(out_marked) / out_total;
    return {fin >= 0.95 && fout <= 0.05 && svd_err <= 1e-6,
            fmt("disk interior %.1f%% marked, background %.2f%% marked; singular values vs dense SVD max err %.1e",
                100.0 * fin, 100.0 * fout, svd_err)};
}

Verdict parameter_effects(Context& ctx) {
    std::string failures;
    std::vector<std::string> ran;
    auto attempt = [&](const std::string& label, SynthesisConfig cfg) -> std::optional<PlanarImage> {
        try {
            const auto t0 = Clock::now();
            auto img = ctx.run(ctx.edge, cfg).image;
            ran.push_back(fmt("%s %.0fs", label.c_str(), since(t0)));
            return img;
        } catch (const std::exception& e) {
            failures += label + ": " + e.what() + "; ";
            return std::nullopt;
        }
    };
    std::optional<PlanarImage> baseline;
    for (int L = 1; L <= 4; ++L) {
        SynthesisConfig cfg;
        cfg.l_max = L;
        auto img = attempt(fmt("L=%d", L), cfg);
        if (L == 3) baseline = std::move(img);
    }
    const std::vector<std::pair<std::vector<int>, std::vector<int>>> schedules{
        {{33, 21, 13, 9, 5}, {28, 18, 8, 5, 3}}, {{33, 21, 13}, {28, 18, 8}}, {{33, 21}, {28, 18}}};
    for (const auto& [sizes, gaps] : schedules) {
        SynthesisConfig cfg;
        cfg.patch_sizes = sizes;
        cfg.gaps = gaps;
        (void)attempt(fmt("%zu sizes", sizes.size()), cfg);
    }
    SynthesisConfig dense;
    for (std::size_t i = 0; i < dense.patch_sizes.size(); ++i) {
        dense.gaps[i] = std::max(1, static_cast<int>(std::lround(dense.patch_sizes[i] / std::pow(1.2, 8))));
    }
    const auto dense_img = attempt("dense gaps", dense);
    SynthesisConfig reseeded;
    reseeded.seed = 1;
    const auto seed_img = attempt("seed 1", reseeded);
    if (!baseline || !dense_img || !seed_img) return {false, "runs failed: " + failures};
    const double dense_diff = mean_abs_diff(*dense_img, *baseline);
    const double seed_diff = mean_abs_diff(*seed_img, *baseline);
    // Diagnostics only: whether the dense result is a different realisation
    // (equally far from both seeds) or a shifted one (contrast changes).
    const double dense_vs_seed1 = mean_abs_diff(*dense_img, *seed_img);
    auto spread = [](const PlanarImage& img) {
        double s = 0.0;
        for (int c = 0; c < 3; ++c) {
            const auto p = img.plane(c);
            const double m = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
            double v = 0.0;
            for (double x : p) v += (x - m) * (x - m);
            s += std::sqrt(v / static_cast<double>(p.size())) / 3.0;
        }
        return s;
    };
    std::string list;
    for (const auto& r : ran) list += (list.empty() ? "" : ", ") + r;
    return {failures.empty() && dense_diff <= seed_diff,
            fmt("ran %s; dense gaps [%d,%d,%d,%d] differ from default by %.2f levels, seeds differ by %.2f "
                "(dense vs seed 1 %.2f; mean channel std default %.1f, dense %.1f)",
                list.c_str(), dense.gaps[0], dense.gaps[1], dense.gaps[2], dense.gaps[3], dense_diff, seed_diff,
                dense_vs_seed1, spread(*baseline), spread(*dense_img))};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    std::string work = "acceptance_work";
    std::vector<int> known;
    app.add_option("--work-dir", work, "Scratch directory (index cache, outputs)");
    app.add_option("--known-failure", known,
                   "Criteria whose failure is analysed in the README; they still print FAIL but do not set the exit code")
        ->check(CLI::Range(1, 12));
    CLI11_PARSE(app, argc, argv);

    Context ctx;
    ctx.work = work;
    fs::create_directories(ctx.work);
    ctx.content_path = ctx.work / "content.png";
    ctx.style_path = ctx.work / "style.png";
    save_png(ctx.content_path, demo::content_image(400, 400));
    save_png(ctx.style_path, demo::style_image(400, 400));
    ctx.content = load_image(ctx.content_path);
    ctx.style = load_image(ctx.style_path);
    ctx.edge = edge_mask(ctx.content, {});
    ctx.cache = std::make_unique<IndexCache>(ctx.work / "cache");

    const std::vector<std::pair<int, const char*>> titles{
        {1, "IRLS descent"},          {2, "r=2 exactness"},         {3, "texture-synthesis reduction"},
        {4, "content limit"},         {5, "ANN quality"},           {6, "PCA energy"},
        {7, "energy trace shape"},    {8, "palette fidelity"},      {9, "determinism"},
        {10, "performance"},          {11, "segmentation sanity"},  {12, "parameter effects"}};
    std::map<int, Verdict> results;
    auto guarded = [&](int id, const std::function<Verdict()>& f) {
        const auto t0 = Clock::now();
        try {
            results[id] = f();
        } catch (const std::exception& e) {
            results[id] = {false, std::string("exception: ") + e.what()};
        }
        std::cerr << "criterion " << id << " finished in " << fmt("%.1f", since(t0)) << " s\n";
    };

    guarded(1, irls_descent);
    guarded(2, r2_exactness);
    guarded(11, segmentation_sanity);
    guarded(6, [&] { return pca_energy(ctx); });
    guarded(5, [&] { return ann_quality(ctx); });
    guarded(8, [&] { return palette_fidelity(ctx); });
    guarded(3, [&] { return texture_reduction(ctx); });
    guarded(4, [&] { return content_limit(ctx); });
    {
        bool det = false;
        std::string det_detail;
        Verdict perf;
        guarded(7, [&] { return cli_runs(ctx, det, det_detail, perf); });
        results[9] = {det, det_detail};
        results[10] = perf;
    }
    guarded(12, [&] { return parameter_effects(ctx); });

    int unexpected = 0;
    for (const auto& [id, title] : titles) {
        const auto& v = results[id];
        const bool is_known = std::find(known.begin(), known.end(), id) != known.end();
        unexpected += !v.pass && !is_known;
        std::cout << (v.pass ? "PASS" : "FAIL") << "  " << id << "  " << title << ": " << v.detail;
        if (is_known) std::cout << (v.pass ? " [listed as a known failure but passed]" : " [known failure]");
        std::cout << '\n';
    }
    return unexpected == 0 ? 0 : 1;
}
