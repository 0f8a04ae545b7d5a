// greendc: validate scenarios, generate traces, train the solar predictor,
// run simulations, compare reports. Exit codes: 0 success, 1 user error,
// 2 internal error.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "greendc/forecast.hpp"
#include "greendc/report.hpp"
#include "greendc/scenario.hpp"
#include "greendc/sim.hpp"
#include "greendc/tracegen.hpp"

namespace {

std::string output_root(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("GREENDC_OUT"); env && *env) return env;
  return "runs";
}

int cmd_validate(const std::vector<std::string>& paths) {
  bool clean = true;
  for (const auto& path : paths) {
    try {
      greendc::ScenarioConfig cfg = greendc::ScenarioConfig::load(path);
      cfg.validate();
      greendc::ClusterState cluster = greendc::ClusterState::from_csv(cfg.cluster_file);
      std::vector<double> rates = greendc::load_interactive_trace(cfg.interactive_file);
      if (static_cast<int>(rates.size()) < cfg.horizon)
        throw greendc::ConfigError("interactive trace covers " +
                                   std::to_string(rates.size()) +
                                   " intervals but horizon is " +
                                   std::to_string(cfg.horizon));
      greendc::BatchTrace batch = greendc::load_batch_trace(cfg.batch_file, cfg.dt_s);
      for (const auto& rej : batch.rejected)
        std::cout << path << ": warning: row " << rej.row << ": job " << rej.job_id
                  << " rejected: " << rej.reason << "\n";
      std::vector<greendc::SolarRecord> solar = greendc::load_irradiance(cfg.solar_file);
      int iph = static_cast<int>(3600.0 / cfg.dt_s);
      int hours_needed = iph > 0 ? (cfg.horizon + iph - 1) / iph : cfg.horizon;
      if (static_cast<int>(solar.size()) < hours_needed)
        throw greendc::ConfigError("solar trace covers " + std::to_string(solar.size()) +
                                   " hours but the run needs " +
                                   std::to_string(hours_needed));

      double capacity = 0.0;
      for (const auto& h : cluster.hosts()) capacity += h.spec.cpu_capacity;
      greendc::InteractiveWorkload web{"web", rates, cfg.service_rate, cfg.target_rt_s};
      web.validate();
      double peak = 0.0;
      for (int t = 0; t < cfg.horizon; ++t) {
        double d = web.demand(t);
        for (const auto& j : batch.jobs)
          if (j.running_at(t)) d += j.unit_util;
        peak = std::max(peak, d);
      }
      if (peak > capacity)
        std::cout << path << ": warning: peak demand " << peak << " units exceeds fleet capacity "
                  << capacity << "\n";
      std::cout << path << ": ok (" << cluster.host_count() << " hosts, " << rates.size()
                << " intervals, " << batch.jobs.size() << " jobs, " << solar.size()
                << "h solar)\n";
    } catch (const greendc::SimError& e) {
      std::cout << path << ": error: " << e.what() << "\n";
      clean = false;
    }
  }
  return clean ? 0 : 1;
}

struct RunSlot {
  greendc::ScenarioConfig cfg;
  std::string out_dir;
  greendc::MetricsReport report;
  std::string error;
  bool internal = false;
};

int cmd_run(const std::vector<std::string>& paths, const std::vector<std::string>& overrides,
            const std::string& out_flag, unsigned workers) {
  std::string root = output_root(out_flag);
  std::vector<RunSlot> slots;
  for (const auto& path : paths) {
    RunSlot s;
    s.cfg = greendc::ScenarioConfig::load(path);
    for (const auto& ov : overrides) s.cfg.apply_override(ov);
    s.cfg.validate();
    s.out_dir = root + "/" + s.cfg.name;
    slots.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < slots.size(); ++i)
    for (std::size_t j = i + 1; j < slots.size(); ++j)
      if (slots[i].out_dir == slots[j].out_dir)
        throw greendc::ConfigError("two scenarios both write to " + slots[i].out_dir +
                                   "; set distinct name= values");

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(slots.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next.fetch_add(1); i < slots.size(); i = next.fetch_add(1)) {
      RunSlot& s = slots[i];
      try {
        greendc::Simulation sim(s.cfg);
        s.report = sim.run();
        greendc::write_report(s.report, s.out_dir);
      } catch (const greendc::SimError& e) {
        s.error = e.what();
      } catch (const std::exception& e) {
        s.error = e.what();
        s.internal = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  int rc = 0;
  for (const auto& s : slots) {
    if (!s.error.empty()) {
      std::cerr << s.cfg.name << ": error: " << s.error << "\n";
      rc = std::max(rc, s.internal ? 2 : 1);
      continue;
    }
    const auto& r = s.report;
    std::printf("%s: policy=%s predictor=%s seed=%lu\n", s.cfg.name.c_str(), r.policy.c_str(),
                r.predictor.c_str(), r.seed);
    std::printf("  energy   brown %.3f kWh  green %.3f kWh  total %.3f kWh\n", r.brown_kwh,
                r.green_kwh, r.total_kwh);
    std::printf("  resp     mean %.1f ms  p95 %.1f ms  p99 %.1f ms\n", r.mean_rt_ms, r.p95_rt_ms,
                r.p99_rt_ms);
    std::printf("  batch    completed %d  deferred %d  deadline misses %d\n", r.completed_jobs,
                r.deferred_jobs, r.deadline_violations);
    std::printf("  cluster  mean active hosts %.2f  deactivation %.1f%%  migrations %d\n",
                r.mean_active_hosts, 100.0 * r.deactivation_pct, r.migrations);
    std::printf("  report   %s/summary.json\n", s.out_dir.c_str());
  }
  return rc;
}

int cmd_gen_traces(const greendc::TraceGenConfig& cfg, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw greendc::IoError("cannot create " + out_dir + ": " + ec.message());
  std::string ipath = out_dir + "/interactive.csv";
  std::string bpath = out_dir + "/batch.csv";
  std::string spath = out_dir + "/solar_" + cfg.season + ".csv";
  greendc::write_interactive_csv(ipath, greendc::gen_interactive(cfg));
  greendc::write_batch_csv(bpath, greendc::gen_batch(cfg));
  greendc::write_solar_csv(spath, greendc::gen_solar(cfg));
  std::cout << "wrote " << ipath << "\n";
  std::cout << "wrote " << bpath << "\n";
  std::cout << "wrote " << spath << "\n";
  return 0;
}

int cmd_train_solar(const std::string& path, const greendc::SvrParams& params,
                    double train_fraction) {
  std::vector<greendc::SolarRecord> records = greendc::load_irradiance(path);
  greendc::SolarModel model = greendc::SolarModel::train(records, params, train_fraction);
  const greendc::SolarMetrics& m = model.metrics();
  std::printf("records            %zu\n", records.size());
  std::printf("train rows         %zu\n", m.train_rows);
  std::printf("test rows          %zu\n", m.test_rows);
  std::printf("holdout r2         %.4f\n", m.r2);
  std::printf("holdout pearson r  %.4f\n", m.pearson_r);
  return 0;
}

int cmd_compare(const std::string& path_a, const std::string& path_b) {
  auto a = greendc::load_summary(path_a);
  auto b = greendc::load_summary(path_b);
  auto rows = greendc::compare_summaries(a, b);
  std::string la = a.contains("policy") && a["policy"].is_string()
                       ? a["policy"].get<std::string>()
                       : std::string("a");
  std::string lb = b.contains("policy") && b["policy"].is_string()
                       ? b["policy"].get<std::string>()
                       : std::string("b");
  if (la == lb) {
    la += " (a)";
    lb += " (b)";
  }
  std::cout << greendc::format_compare(rows, la, lb);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"renewable-aware micro data center simulator"};
  app.require_subcommand(1);

  auto* validate = app.add_subcommand("validate", "parse and cross-check scenario files");
  std::vector<std::string> validate_paths;
  validate->add_option("scenario", validate_paths, "scenario file(s)")->required();

  auto* run = app.add_subcommand("run", "run one or more scenarios");
  std::vector<std::string> run_paths, run_sets;
  std::string run_out;
  unsigned run_workers = 0;
  run->add_option("scenario", run_paths, "scenario file(s)")->required();
  run->add_option("--set", run_sets, "override scenario keys, key=value");
  run->add_option("--out", run_out, "output root (default $GREENDC_OUT or ./runs)");
  run->add_option("--workers", run_workers, "parallel workers, 0 = hardware default");

  auto* gen = app.add_subcommand("gen-traces", "generate workload and irradiance traces");
  greendc::TraceGenConfig gen_cfg;
  std::string gen_out;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_cfg.seed, "rng seed");
  gen->add_option("--dt-s", gen_cfg.dt_s, "interval length, seconds");
  gen->add_option("--horizon", gen_cfg.horizon, "intervals per day");
  gen->add_option("--season", gen_cfg.season, "solar season: autumn | summer");
  gen->add_option("--days", gen_cfg.solar_days, "solar history days incl. the run day");
  gen->add_option("--jobs", gen_cfg.jobs, "batch job count");
  gen->add_option("--peak-interactive-util", gen_cfg.peak_interactive_util,
                  "interactive peak as a fraction of fleet capacity");
  gen->add_option("--batch-util", gen_cfg.batch_util,
                  "concurrent batch cap as a fraction of fleet capacity");
  gen->add_option("--deadline-mean-h", gen_cfg.deadline_mean_h, "deadline mean, hours");
  gen->add_option("--deadline-std-h", gen_cfg.deadline_std_h, "deadline std dev, hours");
  gen->add_option("--cluster-capacity", gen_cfg.cluster_capacity,
                  "fleet capacity in utilization units");

  auto* train = app.add_subcommand("train-solar", "fit the irradiance predictor");
  std::string train_path;
  greendc::SvrParams train_params;
  double train_fraction = 0.8;
  train->add_option("csv", train_path, "hourly irradiance csv")->required();
  train->add_option("--c", train_params.c, "svr cost");
  train->add_option("--epsilon", train_params.epsilon_tube, "insensitive-tube width");
  train->add_option("--gamma", train_params.gamma, "rbf bandwidth, 0 = median heuristic");
  train->add_option("--train-fraction", train_fraction, "chronological split fraction");

  auto* compare = app.add_subcommand("compare", "diff two run summaries");
  std::string cmp_a, cmp_b;
  compare->add_option("a", cmp_a, "first summary.json")->required();
  compare->add_option("b", cmp_b, "second summary.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(validate)) return cmd_validate(validate_paths);
    if (app.got_subcommand(run)) return cmd_run(run_paths, run_sets, run_out, run_workers);
    if (app.got_subcommand(gen)) return cmd_gen_traces(gen_cfg, gen_out);
    if (app.got_subcommand(train)) return cmd_train_solar(train_path, train_params, train_fraction);
    if (app.got_subcommand(compare)) return cmd_compare(cmp_a, cmp_b);
    return 1;
  } catch (const greendc::SimError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
