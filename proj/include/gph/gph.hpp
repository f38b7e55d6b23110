#ifndef GPH_GPH_HPP
#define GPH_GPH_HPP

#include "gph/codes.hpp"
#include "gph/data.hpp"
#include "gph/errors.hpp"
#include "gph/eval.hpp"
#include "gph/gp.hpp"
#include "gph/hash.hpp"
#include "gph/kernel.hpp"
#include "gph/labels.hpp"
#include "gph/normal.hpp"
#include "gph/trainer.hpp"

#endif // GPH_GPH_HPP
