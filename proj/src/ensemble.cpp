// Manifest-driven ensemble execution over a bounded worker pool.
#include "epi/ensemble.hpp"

#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <sstream>
#include <thread>

#include "epi/checkpoint.hpp"

namespace epi {
namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_params_line(std::ostream& out, const SimParams& p) {
  out << "params";
  for (double v : {p.transmission_rate, p.frac_e_to_p, p.frac_p_to_sm, p.frac_h_to_c,
                   p.frac_c_to_d, p.rel_infectiousness_symptomatic,
                   p.rel_infectiousness_detected, p.detect_prob_a, p.detect_prob_p,
                   p.detect_prob_sm, p.detect_prob_ss}) {
    out << ' ' << fmt_double(v);
  }
  out << ' ' << p.detection_delay_days;
  for (const SojournSpec* s : {&p.sojourn_e, &p.sojourn_p, &p.sojourn_a, &p.sojourn_sm,
                               &p.sojourn_ss, &p.sojourn_h, &p.sojourn_c, &p.sojourn_hp}) {
    out << ' ' << fmt_double(s->mean_days) << ' ' << fmt_double(s->shape);
  }
  out << '\n';
}

SimParams read_params_line(std::istringstream& in) {
  SimParams p;
  for (double* v : {&p.transmission_rate, &p.frac_e_to_p, &p.frac_p_to_sm, &p.frac_h_to_c,
                    &p.frac_c_to_d, &p.rel_infectiousness_symptomatic,
                    &p.rel_infectiousness_detected, &p.detect_prob_a, &p.detect_prob_p,
                    &p.detect_prob_sm, &p.detect_prob_ss}) {
    if (!(in >> *v)) throw std::runtime_error("manifest: bad params line");
  }
  if (!(in >> p.detection_delay_days)) throw std::runtime_error("manifest: bad params line");
  for (SojournSpec* s : {&p.sojourn_e, &p.sojourn_p, &p.sojourn_a, &p.sojourn_sm,
                         &p.sojourn_ss, &p.sojourn_h, &p.sojourn_c, &p.sojourn_hp}) {
    if (!(in >> s->mean_days >> s->shape)) throw std::runtime_error("manifest: bad params line");
  }
  return p;
}

}  // namespace

std::string RunManifest::to_text() const {
  std::ostringstream out;
  out << "epi-manifest v1\n";
  out << "master_seed " << master_seed << '\n';
  out << "result_window " << result_window << '\n';
  out << "parallelism " << parallelism << '\n';
  for (const SimTask& task : tasks) {
    out << "task " << task.particle << ' ' << task.advance_to << '\n';
    if (task.restore_from.has_value()) {
      out << "from " << task.restore_from->window << ' ' << task.restore_from->particle
          << '\n';
      const RestoreOverrides& o = task.overrides;
      if (o.seed) out << "override seed " << *o.seed << '\n';
      if (o.transmission_rate)
        out << "override theta " << fmt_double(*o.transmission_rate) << '\n';
      if (o.frac_e_to_p) out << "override frac_e_to_p " << fmt_double(*o.frac_e_to_p) << '\n';
      if (o.frac_p_to_sm)
        out << "override frac_p_to_sm " << fmt_double(*o.frac_p_to_sm) << '\n';
      if (o.rel_infectiousness_symptomatic)
        out << "override rel_inf_symptomatic "
            << fmt_double(*o.rel_infectiousness_symptomatic) << '\n';
      if (o.rel_infectiousness_detected)
        out << "override rel_inf_detected " << fmt_double(*o.rel_infectiousness_detected)
            << '\n';
    } else {
      out << "init " << task.population << ' ' << task.initial_exposed << ' ' << task.seed
          << '\n';
      write_params_line(out, task.params);
    }
    out << "end\n";
  }
  return out.str();
}

RunManifest RunManifest::from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "epi-manifest v1") {
    throw std::runtime_error("manifest: missing header");
  }
  RunManifest m;
  SimTask* current = nullptr;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string word;
    fields >> word;
    if (word == "master_seed") {
      fields >> m.master_seed;
    } else if (word == "result_window") {
      fields >> m.result_window;
    } else if (word == "parallelism") {
      fields >> m.parallelism;
    } else if (word == "task") {
      m.tasks.emplace_back();
      current = &m.tasks.back();
      if (!(fields >> current->particle >> current->advance_to)) {
        throw std::runtime_error("manifest: bad task line");
      }
    } else if (word == "from") {
      if (!current) throw std::runtime_error("manifest: 'from' outside task");
      CheckpointKey key;
      if (!(fields >> key.window >> key.particle)) {
        throw std::runtime_error("manifest: bad from line");
      }
      current->restore_from = key;
    } else if (word == "init") {
      if (!current) throw std::runtime_error("manifest: 'init' outside task");
      if (!(fields >> current->population >> current->initial_exposed >> current->seed)) {
        throw std::runtime_error("manifest: bad init line");
      }
    } else if (word == "params") {
      if (!current) throw std::runtime_error("manifest: 'params' outside task");
      current->params = read_params_line(fields);
    } else if (word == "override") {
      if (!current) throw std::runtime_error("manifest: 'override' outside task");
      std::string name;
      fields >> name;
      RestoreOverrides& o = current->overrides;
      if (name == "seed") {
        std::uint64_t v;
        fields >> v;
        o.seed = v;
      } else {
        double v;
        if (!(fields >> v)) throw std::runtime_error("manifest: bad override value");
        if (name == "theta") o.transmission_rate = v;
        else if (name == "frac_e_to_p") o.frac_e_to_p = v;
        else if (name == "frac_p_to_sm") o.frac_p_to_sm = v;
        else if (name == "rel_inf_symptomatic") o.rel_infectiousness_symptomatic = v;
        else if (name == "rel_inf_detected") o.rel_infectiousness_detected = v;
        else throw std::runtime_error("manifest: unknown override '" + name + "'");
      }
    } else if (word == "end") {
      current = nullptr;
    } else {
      throw std::runtime_error("manifest: unknown directive '" + word + "'");
    }
  }
  return m;
}

std::vector<TaskOutcome> execute(const RunManifest& manifest, CheckpointStore& store) {
  if (manifest.parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");

  // Launch-time validation: every restore reference must already be stored.
  std::string missing;
  for (const SimTask& task : manifest.tasks) {
    if (task.restore_from && !store.has(*task.restore_from)) {
      if (!missing.empty()) missing += ", ";
      missing += "(window " + std::to_string(task.restore_from->window) + ", particle " +
                 std::to_string(task.restore_from->particle) + ")";
    }
  }
  if (!missing.empty()) throw StoreError("missing checkpoints: " + missing);

  const std::size_t n = manifest.tasks.size();
  std::vector<TaskOutcome> outcomes(n);
  std::vector<std::uint64_t> checksums(n, 0);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> store_failed{false};
  std::mutex store_error_mutex;
  std::string store_error;

  auto worker = [&]() {
    while (!store_failed.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      const SimTask& task = manifest.tasks[i];
      TaskOutcome& out = outcomes[i];
      try {
        SeirModel model =
            task.restore_from
                ? SeirModel::restore(store.get(*task.restore_from), task.overrides)
                : SeirModel(task.population, task.initial_exposed, task.params, task.seed);
        model.advance(task.advance_to);
        const std::vector<std::uint8_t> bytes = model.save_checkpoint();
        checksums[i] = fnv1a64(bytes);
        store.put_file({manifest.result_window, task.particle}, bytes);
        out.trajectory = model.trajectory();
        out.ok = true;
      } catch (const StoreError& err) {
        std::lock_guard<std::mutex> lock(store_error_mutex);
        if (!store_failed.exchange(true)) store_error = err.what();
        return;
      } catch (const std::exception& err) {
        out.ok = false;
        out.error = err.what();
      }
    }
  };

  const std::size_t nthreads =
      std::min<std::size_t>(static_cast<std::size_t>(manifest.parallelism), std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  if (store_failed.load()) throw StoreError(store_error);

  // Index entries are recorded by the coordinator in task order so the store
  // index does not depend on thread scheduling.
  for (std::size_t i = 0; i < n; ++i) {
    if (outcomes[i].ok) {
      store.index_add({manifest.result_window, manifest.tasks[i].particle}, checksums[i]);
    }
  }
  return outcomes;
}

}  // namespace epi
