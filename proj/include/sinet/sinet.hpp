#pragma once

// Umbrella header: the whole library.

#include "sinet/adam.hpp"
#include "sinet/checkpoint.hpp"
#include "sinet/crc32.hpp"
#include "sinet/data_io.hpp"
#include "sinet/encoding.hpp"
#include "sinet/errors.hpp"
#include "sinet/gradcheck.hpp"
#include "sinet/model.hpp"
#include "sinet/ops.hpp"
#include "sinet/parallel.hpp"
#include "sinet/rng.hpp"
#include "sinet/scharber.hpp"
#include "sinet/tensor.hpp"
#include "sinet/training.hpp"
#include "sinet/transfer.hpp"
