#include "ahrl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "ahrl/dot.hpp"
#include "ahrl/gridworld.hpp"

namespace ahrl::harness {

namespace {

std::uint64_t mix(std::initializer_list<std::uint64_t> parts) {
  std::vector<std::uint32_t> words;
  for (auto p : parts) {
    words.push_back(static_cast<std::uint32_t>(p));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
  if (cfg.episodes < 1) throw std::invalid_argument("episodes must be at least 1");
  if (cfg.trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (cfg.test_every < 1) throw std::invalid_argument("test-every must be at least 1");
  if (cfg.sliding_window < 1) throw std::invalid_argument("window must be at least 1");
  if (cfg.modes.empty()) throw std::invalid_argument("no modes selected");
  if (cfg.threads < 0) throw std::invalid_argument("threads must not be negative");
  for (std::size_t i = 0; i < cfg.modes.size(); ++i) {
    for (std::size_t j = i + 1; j < cfg.modes.size(); ++j) {
      if (cfg.modes[i] == cfg.modes[j]) throw std::invalid_argument("mode listed twice: " + to_string(cfg.modes[i]));
    }
  }
  const auto& a = cfg.agent;
  if (a.learning_rate < 0.0 || a.learning_rate > 1.0) throw std::invalid_argument("learning rate must lie in [0,1]");
  if (a.discount < 0.0 || a.discount > 1.0) throw std::invalid_argument("discount must lie in [0,1]");
  if (a.stuck_limit < 1) throw std::invalid_argument("stuck limit must be at least 1");
}

std::uint64_t test_world_index(int episode) { return (std::uint64_t{1} << 32) + static_cast<std::uint64_t>(episode); }

std::uint64_t agent_seed(std::uint64_t master_seed, agent::Mode mode, int trial) {
  return mix({master_seed, static_cast<std::uint64_t>(mode), static_cast<std::uint64_t>(trial)});
}

std::vector<MetricsRow> run_trial(const ExperimentConfig& cfg, const logic::KnowledgeBase& kb,
                                  const world::CraftBook& book, agent::Mode mode, int trial) {
  const std::uint64_t seed = agent_seed(cfg.master_seed, mode, trial);
  agent::AgentState state;
  state.rng.seed(seed);

  agent::EpisodeContext train;
  train.kb = &kb;
  train.book = &book;
  train.cfg = cfg.agent;
  train.cfg.mode = mode;
  agent::EpisodeContext test = train;
  test.learning = false;

  std::vector<MetricsRow> rows;
  for (int e = 0; e < cfg.episodes; ++e) {
    train.epsilon = agent::epsilon_at(train.cfg, e, cfg.episodes);
    agent::run_episode(world::generate_episode(static_cast<std::uint64_t>(e), book), state, train, state.rng);
    if ((e + 1) % cfg.test_every != 0) continue;

    std::mt19937_64 test_rng(mix({seed, static_cast<std::uint64_t>(e)}));
    const auto r = agent::run_episode(world::generate_episode(test_world_index(e + 1), book), state, test, test_rng);
    rows.push_back({mode, trial, e + 1, r.extrinsic_return, r.steps, r.plans_requested, r.cache_hits, r.solver_ms});
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const logic::KnowledgeBase& kb,
                                const world::CraftBook& book) {
  validate(cfg);
  const auto started = std::chrono::steady_clock::now();

  struct Job {
    agent::Mode mode;
    int trial;
  };
  std::vector<Job> jobs;
  for (auto m : cfg.modes) {
    for (int t = 0; t < cfg.trials; ++t) jobs.push_back({m, t});
  }
  std::vector<std::vector<MetricsRow>> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_threads = std::min<std::size_t>(jobs.size(), cfg.threads > 0 ? cfg.threads : hw);
  {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < n_threads; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i; (i = next++) < jobs.size();) {
          try {
            results[i] = run_trial(cfg, kb, book, jobs[i].mode, jobs[i].trial);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ExperimentResult out;
  for (auto& r : results) out.rows.insert(out.rows.end(), r.begin(), r.end());
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

std::vector<CurvePoint> window_average(const std::vector<MetricsRow>& rows, int window) {
  // mode -> trial -> rows in episode order
  std::map<agent::Mode, std::map<int, std::vector<const MetricsRow*>>> grouped;
  for (const auto& r : rows) grouped[r.mode][r.trial].push_back(&r);

  std::vector<CurvePoint> curve;
  for (auto& [mode, trials] : grouped) {
    std::set<int> episodes;
    for (auto& [_, rs] : trials) {
      std::sort(rs.begin(), rs.end(), [](const auto* a, const auto* b) { return a->episode < b->episode; });
      for (const auto* r : rs) episodes.insert(r->episode);
    }
    for (int e : episodes) {
      double total = 0.0;
      int counted = 0;
      for (const auto& [_, rs] : trials) {
        double sum = 0.0;
        int n = 0;
        for (const auto* r : rs) {
          if (r->episode > e - window && r->episode <= e) {
            sum += r->test_return;
            ++n;
          }
        }
        if (n == 0) continue;
        total += sum / n;
        ++counted;
      }
      curve.push_back({mode, e, counted == 0 ? 0.0 : total / counted});
    }
  }
  return curve;
}

double final_window_mean(const std::vector<CurvePoint>& curve, agent::Mode mode) {
  for (auto it = curve.rbegin(); it != curve.rend(); ++it) {
    if (it->mode == mode) return it->mean_return;
  }
  throw std::invalid_argument("no curve for " + to_string(mode));
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out = std::string(kMetricsSchema) + "\nmode,trial,episode,test_return,steps,plans_requested,cache_hits\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{}\n", to_string(r.mode), r.trial, r.episode, r.test_return, r.steps,
                       r.plans_requested, r.cache_hits);
  }
  return out;
}

std::string timing_csv(const std::vector<MetricsRow>& rows) {
  std::string out = "mode,trial,episode,solver_ms\n";
  for (const auto& r : rows) out += fmt::format("{},{},{},{:.3f}\n", to_string(r.mode), r.trial, r.episode, r.solver_ms);
  return out;
}

std::string summary_csv(const std::vector<CurvePoint>& curve) {
  std::string out = "mode,episode,window_mean_return\n";
  for (const auto& p : curve) out += fmt::format("{},{},{}\n", to_string(p.mode), p.episode, p.mean_return);
  return out;
}

std::string config_echo(const ExperimentConfig& cfg) {
  std::string modes;
  for (auto m : cfg.modes) modes += (modes.empty() ? "" : ",") + to_string(m);
  const auto& a = cfg.agent;
  std::string out;
  out += fmt::format("kb = {}\ndomain = {}\nout = {}\n", cfg.kb_path, cfg.domain_path, cfg.output_dir);
  out += fmt::format("modes = {}\nepisodes = {}\ntrials = {}\ntest-every = {}\nwindow = {}\nseed = {}\n", modes,
                     cfg.episodes, cfg.trials, cfg.test_every, cfg.sliding_window, cfg.master_seed);
  out += fmt::format("intrinsic-reward = {}\nstep-penalty = {}\nlava-penalty = {}\nlearning-rate = {}\ndiscount = {}\n",
                     a.intrinsic_reward, a.step_penalty, a.lava_penalty, a.learning_rate, a.discount);
  out += fmt::format("epsilon = {} -> {} over {} of training\nstuck-limit = {}\nplanner-timeout-ms = {}\n",
                     a.epsilon_start, a.epsilon_end, a.epsilon_anneal_fraction, a.stuck_limit, a.planner_timeout_ms);
  return out;
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result, const logic::KnowledgeBase& kb,
                   const world::CraftBook& book) {
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "metrics.csv", metrics_csv(result.rows));
  write_file(dir / "timing.csv", timing_csv(result.rows));
  write_file(dir / "summary.csv", summary_csv(window_average(result.rows, cfg.sliding_window)));
  write_file(dir / "run_config.txt", config_echo(cfg));

  if (std::find(cfg.modes.begin(), cfg.modes.end(), agent::Mode::abductive) == cfg.modes.end()) return;
  agent::AgentConfig abductive = cfg.agent;
  abductive.mode = agent::Mode::abductive;
  for (int n = 0; n < cfg.dot_exports; ++n) {
    const auto w = world::generate_episode(static_cast<std::uint64_t>(n), book);
    const auto obs = world::to_observation(world::initial_view(w, book), book);
    planner::PlanCache cache;
    planner::PlanTrace trace;
    planner::plan(kb, obs, agent::planner_config(abductive), cache, &trace);
    write_file(dir / fmt::format("proof_{}.dot", n), export_dot(trace.hypothesis, trace.graph));
  }
}

}  // namespace ahrl::harness
