#pragma once

#include "kernel_lab/dataset.hpp"
#include "kernel_lab/eigen.hpp"
#include "kernel_lab/errors.hpp"
#include "kernel_lab/experiments.hpp"
#include "kernel_lab/io.hpp"
#include "kernel_lab/kernels.hpp"
#include "kernel_lab/metrics.hpp"
#include "kernel_lab/model.hpp"
#include "kernel_lab/preprocess.hpp"
#include "kernel_lab/random.hpp"
#include "kernel_lab/solvers.hpp"
#include "kernel_lab/synthetic.hpp"
#include "kernel_lab/trainers.hpp"
