#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <vector>

#include "roelab/coarse_space.hpp"
#include "roelab/common.hpp"
#include "roelab/expander.hpp"
#include "roelab/groups.hpp"
#include "roelab/lifting.hpp"
#include "roelab/operators.hpp"
#include "roelab/walks.hpp"

namespace py = pybind11;
using namespace roelab;

namespace {

// The C++ API hands out shared pointers to immutable objects; these thin
// value wrappers keep the python surface simple.
struct PyGraph {
  GraphPtr graph;
};

struct PyBox {
  BoxPtr box;
};

struct PyCover {
  CoverPtr cover;
};

MeasureSpec spec_for(double laziness) {
  MeasureSpec spec;
  spec.laziness = laziness;
  return spec;
}

QuotientChain chain_for(const std::string& family, const std::vector<std::uint32_t>& moduli,
                        double laziness) {
  QuotientChain chain;
  chain.family = family_from_string(family);
  chain.moduli = moduli;
  chain.laziness_hint = laziness;
  chain.validate();
  return chain;
}

}  // namespace

PYBIND11_MODULE(_roelab, m) {
  m.doc() = "finite quotient geometry toolkit";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<InvariantViolation>(m, "InvariantViolation", PyExc_RuntimeError);

  py::class_<PyGraph>(m, "CayleyGraph")
      .def_property_readonly("order", [](const PyGraph& g) { return g.graph->order(); })
      .def_property_readonly("modulus", [](const PyGraph& g) { return g.graph->modulus(); })
      .def_property_readonly("diameter", [](const PyGraph& g) { return g.graph->diameter(); })
      .def_property_readonly("family",
                             [](const PyGraph& g) { return to_string(g.graph->family()); })
      .def_property_readonly("generator_count",
                             [](const PyGraph& g) { return g.graph->generator_count(); })
      .def("word_length", [](const PyGraph& g, Vertex x) { return g.graph->word_length(x); },
           py::arg("vertex"))
      .def("dist", [](const PyGraph& g, Vertex x, Vertex y) { return g.graph->dist(x, y); },
           py::arg("x"), py::arg("y"))
      .def("ball", [](const PyGraph& g, Vertex center, int radius) {
             return g.graph->ball(center, radius);
           },
           py::arg("center"), py::arg("radius"), "closed metric ball, BFS order")
      .def("degree", [](const PyGraph& g, Vertex x) { return g.graph->degree(x); },
           py::arg("vertex"))
      .def("sphere_sizes", [](const PyGraph& g) { return g.graph->sphere_sizes(); })
      .def("spectral_gap",
           [](const PyGraph& g, double laziness) {
             return spectral_gap(g.graph, spec_for(laziness).instantiate(*g.graph));
           },
           py::arg("laziness") = 0.5,
           "decay rate of the lazy generator walk on the mean-zero subspace")
      .def("__repr__", [](const PyGraph& g) {
        return "<CayleyGraph " + to_string(g.graph->family()) + " mod " +
               std::to_string(g.graph->modulus()) + ", " + std::to_string(g.graph->order()) +
               " vertices>";
      });

  py::class_<PyBox>(m, "BoxSpace")
      .def_property_readonly("size", [](const PyBox& b) { return b.box->size(); })
      .def_property_readonly("diameter", [](const PyBox& b) { return b.box->diameter(); })
      .def_property_readonly("levels", [](const PyBox& b) { return b.box->levels(); })
      .def("component",
           [](const PyBox& b, int level) { return PyGraph{b.box->component_ptr(level)}; },
           py::arg("level"), "the level-th finite quotient (1-based)")
      .def("geometry_profile",
           [](const PyBox& b, int radius) { return bounded_geometry_profile(*b.box, radius); },
           py::arg("radius"), "largest ball cardinality at the given radius")
      .def("kazhdan_rows",
           [](const PyBox& b, const std::vector<int>& n_list, const std::vector<double>& p_list,
              double laziness, std::uint64_t seed) {
             NormBudget budget;
             budget.seed = seed;
             py::list rows;
             for (const KazhdanRow& row :
                  kazhdan_table(b.box, spec_for(laziness), n_list, p_list, budget)) {
               py::dict d;
               d["level"] = row.level;
               d["N"] = row.order;
               d["n"] = row.n;
               d["p"] = row.p;
               d["lower"] = row.lower;
               d["upper"] = row.upper;
               d["interp_bound"] = row.interp_bound;
               d["rho"] = row.rho;
               rows.append(d);
             }
             return rows;
           },
           py::arg("n_list"), py::arg("p_list"), py::arg("laziness") = 0.5,
           py::arg("seed") = 0x5eedULL,
           "per-level convergence table of the walk approximants")
      .def("ghost_profile",
           [](const PyBox& b, const std::vector<int>& radii, double p, std::uint64_t seed) {
             NormBudget budget;
             budget.seed = seed;
             py::list entries;
             for (const GhostEntry& e :
                  ghost_profile(ghost_projection(b.box), radii, p, budget).entries) {
               py::dict d;
               d["R"] = e.R;
               d["level"] = e.level;
               d["eps"] = e.eps;
               d["eps_upper"] = e.eps_upper;
               entries.append(d);
             }
             return entries;
           },
           py::arg("radii"), py::arg("p") = 2.0, py::arg("seed") = 0x5eedULL,
           "localization profile of the level projections")
      .def("obstruction_json",
           [](const PyBox& b, const std::vector<int>& n_grid, double p, std::size_t ball_radius,
              double laziness, std::uint64_t seed) {
             NormBudget budget;
             budget.seed = seed;
             return obstruction_to_json(
                 obstruction_data(b.box, spec_for(laziness), n_grid, p, ball_radius, budget));
           },
           py::arg("n_grid"), py::arg("p") = 2.0, py::arg("ball_radius") = 26,
           py::arg("laziness") = 0.5, py::arg("seed") = 0x5eedULL,
           "trace / lifted-norm comparison bundle, serialized")
      .def("__repr__", [](const PyBox& b) {
        return "<BoxSpace " + std::to_string(b.box->levels()) + " levels, " +
               std::to_string(b.box->size()) + " points>";
      });

  py::class_<PyCover>(m, "Cover")
      .def_property_readonly("radius", [](const PyCover& c) { return c.cover->radius; })
      .def_property_readonly("deck_order",
                             [](const PyCover& c) { return c.cover->deck_order(); })
      .def_property_readonly("source", [](const PyCover& c) { return PyGraph{c.cover->source}; })
      .def_property_readonly("target", [](const PyCover& c) { return PyGraph{c.cover->target}; })
      .def("lift_trial",
           [](const PyCover& c, int window, std::size_t entries, std::uint64_t seed) {
             const SpacePtr base = as_space(c.cover->target);
             const BlockOperator A = random_operator(base, window, entries, seed);
             const BlockOperator B = random_operator(base, 0, entries, seed + 1);
             const BlockOperator T = random_operator(base, window, entries, seed + 2);
             const EquivariantOperator lifted = lift_operator(T, c.cover, window);
             verify_equivariance(lifted);
             std::ostringstream original, rebuilt;
             write_operator(original, lifted.op);
             write_operator(rebuilt, reconstruct(untwist(lifted)).op);
             py::dict d;
             d["multiplicative"] = lift_multiplicativity_check(A, B, c.cover, window);
             d["trace_exact"] = transversal_trace(lifted) == trace(T);
             d["reconstruction_exact"] = original.str() == rebuilt.str();
             return d;
           },
           py::arg("window") = 1, py::arg("entries") = 20, py::arg("seed") = 0x5eedULL,
           "lift a random operator and check the functor laws")
      .def("__repr__", [](const PyCover& c) {
        return "<Cover " + std::to_string(c.cover->source->modulus()) + " over " +
               std::to_string(c.cover->target->modulus()) + ", radius " +
               std::to_string(c.cover->radius) + ">";
      });

  m.def("cayley_graph",
        [](const std::string& family, std::uint32_t modulus) {
          return PyGraph{build_quotient(chain_for(family, {modulus}, 0.0), 1)};
        },
        py::arg("family"), py::arg("modulus"),
        "finite quotient with the default symmetric generators");

  m.def("box_space",
        [](const std::string& family, const std::vector<std::uint32_t>& moduli, double laziness) {
          const QuotientChain chain = chain_for(family, moduli, laziness);
          return PyBox{assemble_box_space(chain, chain.levels())};
        },
        py::arg("family"), py::arg("moduli"), py::arg("laziness") = 0.5,
        "disjoint union of the quotient family with level separation");

  m.def("quotient_cover",
        [](const std::string& family, const std::vector<std::uint32_t>& moduli, int source_level,
           int target_level) {
          return PyCover{
              quotient_cover(chain_for(family, moduli, 0.0), source_level, target_level)};
        },
        py::arg("family"), py::arg("moduli"), py::arg("source_level"), py::arg("target_level"),
        "metric covering map between two quotient levels");

  m.def("walk_growth",
        [](const std::string& family, std::size_t steps, std::size_t ball_radius,
           double laziness) {
          const WalkGrowth g =
              walk_growth(family_from_string(family), steps, ball_radius, spec_for(laziness));
          py::dict d;
          d["steps"] = g.steps;
          d["growth"] = g.growth;
          d["nth_root"] = g.nth_root;
          d["ball_eigenvalue"] = g.ball_eigenvalue;
          d["ball_radius"] = g.ball_radius;
          return d;
        },
        py::arg("family"), py::arg("steps"), py::arg("ball_radius"), py::arg("laziness") = 0.5,
        "norm growth of the walk on the infinite parent group");

  m.def("parent_local_ratio",
        [](const std::string& family, std::size_t steps, double p, std::size_t ball_radius,
           double laziness) {
          return ParentWalk(family_from_string(family), ball_radius, spec_for(laziness))
              .local_ratio(steps, p);
        },
        py::arg("family"), py::arg("steps"), py::arg("p") = 2.0, py::arg("ball_radius") = 26,
        py::arg("laziness") = 0.5,
        "best p-norm ratio of the n-step parent walk over window-supported vectors");
}
