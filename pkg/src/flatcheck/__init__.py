"""flatcheck: exact flatness verdicts for finitely presented modules over a
local base ring, with machine-checkable certificates.

The engine decides flatness of coker(phi) (x) R/J over R/J by a two-part
criterion per level -- a minor-membership condition plus a fibre-dimension
reduction built from Weierstrass preparation -- and accumulates the local
flattener ideal along the same recursion.  An independent jet-level kernel
oracle cross-validates every verdict.  All arithmetic is exact over Q;
truncation is by total degree with per-series certification orders, so
non-flatness witnesses are exact and flat verdicts are certified "to order".
"""

from .series import (LinearChange, ParseError, PrecisionError, RegularityError,
                     Series, SeriesError, VarSplit, WeierstrassData,
                     XmPolynomial, euclid_divide, parse_series, regularize,
                     weierstrass_divide, weierstrass_prepare, xm_order)
from .ringlinalg import (BlockDecomposition, Ideal, MembershipVerdict,
                         MembershipWitness, SeriesMatrix, adjugate, choose_block,
                         coefficient_ideal, determinant, ideal_contains,
                         ideal_sum, make_ideal, rank_at_origin, rank_mod_ideal,
                         reduced_complement, verify_identity)
from .criterion import (CertificateStep, Cond1Report, EngineConfig,
                        FlatnessVerdict, NonFlatWitness, Presentation,
                        ReductionData, build_reduction, check_condition1,
                        check_flat, describe_psi, verify_reduction)
from .flattener import (BasePoint, FlattenerReport, FlattenerResult,
                        OpennessReport, flattener_ideal, level_ideal,
                        openness_check, translate_base, verify_flattener)
from .oracle import (CrossValidation, JetKernel, OracleVerdict, ProjectionView,
                     check_projection_lemma, cross_validate,
                     direct_flatness_test, jet_kernel_at_origin,
                     jet_kernel_mod_J)

__version__ = "0.1.0"
