#ifndef FRACTALMS_FRACTALMS_HPP
#define FRACTALMS_FRACTALMS_HPP

#include "fractalms/curve.hpp"
#include "fractalms/distribution.hpp"
#include "fractalms/errors.hpp"
#include "fractalms/falpha.hpp"
#include "fractalms/gamma.hpp"
#include "fractalms/philox.hpp"
#include "fractalms/process.hpp"
#include "fractalms/sde.hpp"
#include "fractalms/staircase.hpp"

#endif // FRACTALMS_FRACTALMS_HPP
