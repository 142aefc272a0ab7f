#include "cals/driver.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <optional>
#include <thread>
#include <unordered_set>

#include "cals/error.hpp"
#include "cals/linalg.hpp"
#include "cals/timer.hpp"

namespace cals
{
  std::string_view to_string(ExecutionMode m)
  {
    switch (m)
    {
    case ExecutionMode::SequentialAls: return "als";
    case ExecutionMode::ParallelInstances: return "omp-als";
    case ExecutionMode::Cals: return "cals";
    }
    return "unknown";
  }

  ExecutionMode parse_execution_mode(std::string_view s)
  {
    if (s == "als" || s == "sequential") return ExecutionMode::SequentialAls;
    if (s == "omp-als" || s == "parallel") return ExecutionMode::ParallelInstances;
    if (s == "cals") return ExecutionMode::Cals;
    throw ConfigError("unknown execution mode '" + std::string(s) + "' (expected als, omp-als or cals)");
  }

  void DriverConfig::validate() const
  {
    als.validate();
    if (threads < 1) throw ConfigError("thread count must be at least 1");
    if (capacity.r_star < 1) throw ConfigError("r_star must be positive");
  }

  namespace
  {
    void validate_inputs(const DenseTensor &t, const std::deque<Model> &input, const DriverConfig &cfg)
    {
      cfg.validate();
      if (!(t.sqnorm() > 0.0)) throw NumericalError("cannot fit models to an all-zero tensor");
      std::unordered_set<InstanceId> ids;
      index_t max_rank = 0;
      for (const auto &m : input)
      {
        m.check_conforms(t.dims());
        if (!ids.insert(m.id).second) throw ConfigError("duplicate model id " + std::to_string(m.id));
        max_rank = std::max(max_rank, m.rank);
      }
      if (cfg.mode == ExecutionMode::Cals) cfg.capacity.validate(max_rank);
    }

    index_t max_rank_of(const std::deque<Model> &input)
    {
      index_t r = 1;
      for (const auto &m : input) r = std::max(r, m.rank);
      return r;
    }

    // ---- SequentialAls ------------------------------------------------------------------------

    RunStats run_sequential(const DenseTensor &t, JobQueues &q, const DriverConfig &cfg)
    {
      RunStats stats;
      ScopedBlasThreads blas(cfg.deterministic ? 1 : cfg.threads);
      MttkrpWorkspace ws(t.dims(), max_rank_of(q.input));
      Timer total;
      while (!q.input.empty())
      {
        Model start = std::move(q.input.front());
        q.input.pop_front();
        ws.reset_flops();
        Model done = run_single_als(t, std::move(start), cfg.als, &ws);
        Segment seg{stats.segments++, ws.flops(), done.seconds, done.rank, 1};
        stats.flops.flops += seg.flops.flops;
        if (cfg.on_segment) cfg.on_segment(seg);
        q.output.push_back(std::move(done));
      }
      stats.seconds = total.seconds();
      return stats;
    }

    // ---- ParallelInstances --------------------------------------------------------------------

    RunStats run_parallel(const DenseTensor &t, JobQueues &q, const DriverConfig &cfg)
    {
      RunStats stats;
      std::vector<Model> inputs(std::make_move_iterator(q.input.begin()), std::make_move_iterator(q.input.end()));
      q.input.clear();
      std::vector<std::optional<Model>> results(inputs.size());
      std::vector<Segment> segments(inputs.size());
      const index_t max_rank = [&] {
        index_t r = 1;
        for (const auto &m : inputs) r = std::max(r, m.rank);
        return r;
      }();

      ScopedBlasThreads blas(1);
      std::atomic<std::size_t> next{0};
      std::mutex error_mutex;
      std::exception_ptr error;
      auto worker = [&] {
        try
        {
          MttkrpWorkspace ws(t.dims(), max_rank);
          for (std::size_t k = next++; k < inputs.size(); k = next++)
          {
            ws.reset_flops();
            Model done = run_single_als(t, std::move(inputs[k]), cfg.als, &ws);
            segments[k] = Segment{k, ws.flops(), done.seconds, done.rank, 1};
            results[k] = std::move(done);
          }
        } catch (...)
        {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      };

      Timer total;
      const auto n_workers = static_cast<std::size_t>(std::max(1, cfg.deterministic ? 1 : cfg.threads));
      std::vector<std::thread> pool;
      for (std::size_t w = 1; w < std::min(n_workers, inputs.size()); w++) pool.emplace_back(worker);
      worker();
      for (auto &th : pool) th.join();
      if (error) std::rethrow_exception(error);

      for (std::size_t k = 0; k < results.size(); k++)
      {
        stats.flops.flops += segments[k].flops.flops;
        stats.segments++;
        if (cfg.on_segment) cfg.on_segment(segments[k]);
        q.output.push_back(std::move(*results[k]));
      }
      stats.seconds = total.seconds();
      return stats;
    }

    // ---- Cals ---------------------------------------------------------------------------------

    struct ActiveInstance
    {
      Model model; // factors are emptied while the instance lives in the multi-matrices
      AlsState state;
      Timer admitted;
      bool retire{false};
    };

    RunStats run_cals(const DenseTensor &t, JobQueues &q, const DriverConfig &cfg)
    {
      RunStats stats;
      ScopedBlasThreads blas(cfg.deterministic ? 1 : cfg.threads);

      index_t queued_width = 0;
      for (const auto &m : q.input) queued_width += m.rank;
      const index_t width_cap = std::max<index_t>(1, std::min(cfg.capacity.r_star, queued_width));
      MultiMatrixSet multis(t.dims(), CapacityPolicy{width_cap});
      MttkrpWorkspace ws(t.dims(), width_cap);
      MttkrpWorkspace ls_ws(t.dims(), max_rank_of(q.input));
      const index_t order = t.order();

      std::vector<ActiveInstance> active;
      std::vector<MatrixView> factor_views(static_cast<std::size_t>(order));

      auto bind_views = [&](ActiveInstance &inst) {
        for (index_t n = 0; n < order; n++)
          factor_views[static_cast<std::size_t>(n)] = multis.mode(n).constituent(inst.model.id);
      };

      Timer total;
      while (!q.input.empty() || !active.empty())
      {
        // Admission: strict FIFO, stop at the first model that does not fit.
        while (!q.input.empty())
        {
          Model &head = q.input.front();
          if (!multis.try_insert(head)) break;
          ActiveInstance inst;
          inst.state = AlsState(head.views(), t.dims(), cfg.als);
          inst.model = std::move(head);
          inst.model.factors.clear();
          inst.model.status = ModelStatus::Active;
          inst.model.iterations = 0;
          inst.model.error_history.clear();
          inst.model.fit_history.clear();
          active.push_back(std::move(inst));
          q.input.pop_front();
        }

        Timer segment_timer;
        ws.reset_flops();
        ls_ws.reset_flops();
        const index_t width = multis.active_width();
        stats.max_active_width = std::max(stats.max_active_width, width);

        MatrixView fused;
        for (index_t n = 0; n < order; n++)
        {
          fused = fused_mttkrp(t, multis.modes(), n, ws);
          for (auto &inst : active)
          {
            if (inst.retire) continue;
            const auto &c = multis.layout()[*multis.mode(0).find(inst.model.id)];
            bind_views(inst);
            try
            {
              als_update_mode(fused.cols_range(c.offset, c.rank), n, factor_views, inst.state, cfg.als, inst.model);
            } catch (const NumericalError &)
            {
              inst.model.status = ModelStatus::NumericalFailure;
              inst.retire = true;
            }
          }
        }

        for (auto &inst : active)
        {
          if (inst.retire) continue;
          const auto &c = multis.layout()[*multis.mode(0).find(inst.model.id)];
          bind_views(inst);
          try
          {
            inst.retire = als_end_iteration(t, fused.cols_range(c.offset, c.rank), factor_views, inst.state, cfg.als,
                                            ls_ws, inst.model);
          } catch (const NumericalError &)
          {
            inst.model.status = ModelStatus::NumericalFailure;
            inst.retire = true;
          }
        }

        Segment seg{stats.segments++, FlopCount{ws.flops().flops + ls_ws.flops().flops}, segment_timer.seconds(),
                    width, active.size()};
        stats.flops.flops += seg.flops.flops;
        stats.fused_iterations++;
        if (cfg.on_segment) cfg.on_segment(seg);

        // Retirement sweep over a snapshot, then compaction before the next admission.
        std::vector<ActiveInstance> survivors;
        survivors.reserve(active.size());
        for (auto &inst : active)
        {
          if (!inst.retire)
          {
            survivors.push_back(std::move(inst));
            continue;
          }
          inst.model.factors = multis.remove(inst.model.id);
          inst.model.seconds = inst.admitted.seconds();
          q.output.push_back(std::move(inst.model));
        }
        active = std::move(survivors);
        multis.compress();
      }
      stats.seconds = total.seconds();
      stats.columns_moved = multis.columns_moved();
      return stats;
    }
  } // namespace

  RunStats run(const DenseTensor &t, JobQueues &queues, const DriverConfig &cfg)
  {
    validate_inputs(t, queues.input, cfg);
    if (queues.input.empty()) return {};
    switch (cfg.mode)
    {
    case ExecutionMode::SequentialAls: return run_sequential(t, queues, cfg);
    case ExecutionMode::ParallelInstances: return run_parallel(t, queues, cfg);
    case ExecutionMode::Cals: return run_cals(t, queues, cfg);
    }
    throw ConfigError("unknown execution mode");
  }

  std::deque<Model> run(const DenseTensor &t, std::deque<Model> input, const DriverConfig &cfg, RunStats *stats)
  {
    JobQueues q{std::move(input), {}};
    const auto s = run(t, q, cfg);
    if (stats) *stats = s;
    return std::move(q.output);
  }
} // namespace cals
