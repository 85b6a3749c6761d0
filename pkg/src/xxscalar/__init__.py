"""Scalar products of real vectors on a two-channel spin-1/2 XX line.

Two K-qubit senders encode real vectors in one-excitation pure states; after
XX evolution and a local unitary on the extended receiver, the scaled scalar
product sits in the (00;11) element of the two-qubit receiver density matrix.
"""

__version__ = "0.1.0"
