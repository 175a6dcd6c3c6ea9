EDGE_FLOOR = 1e-10
DECAY_FLOOR = 1e-8
A_FLOOR = 1e-6

SOLVER_TOL = 1e-10
ROUNDTRIP_TOL = 1e-4
UNITARITY_TOL = 1e-8
GLUING_TOL = 1e-5
RELATION_TOL = 1e-10

GMRES_RESTART = 30
GMRES_MAXITER = 200
NEUMANN_THRESHOLD = 0.5

# |z| where r+ switches from the bs trace to bl/(4z)
REGULARIZATION_SPLIT = 1.0

OVERLAP_HALF_WIDTH = 2.0
WINDING_SAMPLES = 256
WINDING_MAX_REFINE = 3

PDE_CFL = 1.0
NYQUIST_SAFETY = 1.0
SUPPORT_FLOOR = 1e-12

RELAXED_FACTOR = 1e4
COARSE_POINTS = 64
# unitarity and parity tolerance once min(Nx, Nz) < COARSE_POINTS
COARSE_UNITARITY_TOL = 5e-2

POTENTIAL_HEADER = "x,re_u,im_u"
SCATTERING_HEADER = "z,re_a,im_a,re_rplus,im_rplus,re_rminus,im_rminus"
