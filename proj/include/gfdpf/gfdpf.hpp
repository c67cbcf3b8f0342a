#pragma once

// Graph-structured fast decoupled power flow with area-decoupled distributed solves.

#include "gfdpf/admittance.hpp"
#include "gfdpf/case_io.hpp"
#include "gfdpf/cholesky.hpp"
#include "gfdpf/distributed.hpp"
#include "gfdpf/fdpf.hpp"
#include "gfdpf/network.hpp"
#include "gfdpf/ordering.hpp"
#include "gfdpf/partition.hpp"
#include "gfdpf/report.hpp"
#include "gfdpf/sparse.hpp"
#include "gfdpf/synthetic.hpp"
#include "gfdpf/thread_pool.hpp"
