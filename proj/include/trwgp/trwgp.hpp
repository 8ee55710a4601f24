#ifndef TRWGP_TRWGP_HPP
#define TRWGP_TRWGP_HPP

// Convenience umbrella for the whole library.

#include <trwgp/numeric.hpp>
#include <trwgp/graph.hpp>
#include <trwgp/mrf.hpp>
#include <trwgp/spanning.hpp>
#include <trwgp/io.hpp>
#include <trwgp/exact.hpp>
#include <trwgp/dual.hpp>
#include <trwgp/gp.hpp>
#include <trwgp/mp.hpp>
#include <trwgp/descent.hpp>

#endif
