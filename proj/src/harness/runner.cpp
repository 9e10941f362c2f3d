#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "concal/harness/experiments.hpp"

namespace concal {

void run_trials(long trials, int workers, const std::function<void(long)>& fn) {
  if (trials <= 0) return;
  const int n_threads =
      static_cast<int>(std::max(1L, std::min<long>(workers, trials)));
  if (n_threads == 1) {
    for (long t = 0; t < trials; ++t) fn(t);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const long t = next.fetch_add(1);
      if (t >= trials) return;
      try {
        fn(t);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

RunReport run_experiment(const Config& config, const RunOptions& options) {
  const std::string name = config.get_str("experiment", "name");
  if (name == "power_control") return run_power_control(config, options);
  if (name == "hyperparam") return run_hyperparam(config, options);
  if (name == "beam") return run_beam(config, options);
  if (name == "counterfactual") return run_counterfactual(config, options);
  throw std::runtime_error("run_experiment: unknown experiment " + name);
}

}  // namespace concal
