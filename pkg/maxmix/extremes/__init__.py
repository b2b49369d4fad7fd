# maxmix 📈, AGPL-3.0 license

from .estimators import (estimate, optimal_y, pair_theta_hat, sigma1_profile, sigma1_sq, sigma23_plugin, theta_hat1,
                         theta_hat2, theta_hat3)
from .mixing import (beta_bound_compact, beta_bound_countable, beta_bound_family, bolthausen_alpha_bound,
                     bolthausen_conditions, clt_condition_check, gamma_bound)
from .pointprocess import (build_coupling, classify_extremal, conditional_law_check, mc_shared_extremal_prob,
                           slyvniak_integral)
from .theta import (Theta4Provider, capital_C, capital_C_bound, tau_a, tau_a_empirical, theta_gap, theta_pair,
                    theta_set)

__all__ = ('estimate', 'optimal_y', 'pair_theta_hat', 'sigma1_profile', 'sigma1_sq', 'sigma23_plugin', 'theta_hat1',
           'theta_hat2', 'theta_hat3', 'beta_bound_compact', 'beta_bound_countable', 'beta_bound_family',
           'bolthausen_alpha_bound', 'bolthausen_conditions', 'clt_condition_check', 'gamma_bound', 'build_coupling',
           'classify_extremal', 'conditional_law_check', 'mc_shared_extremal_prob', 'slyvniak_integral',
           'Theta4Provider', 'capital_C', 'capital_C_bound', 'tau_a', 'tau_a_empirical', 'theta_gap', 'theta_pair',
           'theta_set')
