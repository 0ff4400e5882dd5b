#pragma once

#include "presstopo/errors.hpp"
#include "presstopo/honeymesh.hpp"
#include "presstopo/sparse.hpp"
#include "presstopo/fields.hpp"
#include "presstopo/element_kernels.hpp"
#include "presstopo/fe_model.hpp"
#include "presstopo/darcy.hpp"
#include "presstopo/elasticity.hpp"
#include "presstopo/adjoint.hpp"
#include "presstopo/mma.hpp"
#include "presstopo/config.hpp"
#include "presstopo/problem.hpp"
#include "presstopo/driver.hpp"
#include "presstopo/output.hpp"
