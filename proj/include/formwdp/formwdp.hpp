#pragma once

#include "formwdp/compliance.hpp"
#include "formwdp/decimal.hpp"
#include "formwdp/domain.hpp"
#include "formwdp/duopoly.hpp"
#include "formwdp/error.hpp"
#include "formwdp/financials.hpp"
#include "formwdp/io.hpp"
#include "formwdp/pricing.hpp"
#include "formwdp/quantity.hpp"
#include "formwdp/wdp.hpp"
