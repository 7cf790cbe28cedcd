import math

import numpy as np
from django.test import SimpleTestCase

from .entanglement import (
    AmplitudePair,
    DickePair,
    bare_from_dicke,
    concurrence,
    dicke_from_bare,
    population,
)


class EntanglementTests(SimpleTestCase):
    def test_dicke_states_are_maximally_entangled(self):
        """Test both Dicke states have concurrence 1"""
        for dicke in (DickePair(Cs=1, Ca=0), DickePair(Cs=0, Ca=1)):
            pair = bare_from_dicke(dicke)
            self.assertAlmostEqual(concurrence(pair), 1.0, places=15)
            self.assertAlmostEqual(population(pair), 1.0, places=15)

    def test_product_state_unentangled(self):
        """Test one excited TLS carries no entanglement"""
        pair = AmplitudePair(B1=1, B2=0)
        self.assertEqual(concurrence(pair), 0.0)
        dicke = dicke_from_bare(pair)
        self.assertAlmostEqual(dicke.Cs, 1 / math.sqrt(2), places=15)
        self.assertAlmostEqual(dicke.Ca, 1 / math.sqrt(2), places=15)

    def test_transforms_are_inverse(self):
        """Test bare -> Dicke -> bare returns the amplitudes"""
        pair = AmplitudePair(B1=0.6j, B2=-0.8)
        back = bare_from_dicke(dicke_from_bare(pair))
        self.assertAlmostEqual(back.B1, pair.B1, places=15)
        self.assertAlmostEqual(back.B2, pair.B2, places=15)

    def test_concurrence_ignores_relative_phase(self):
        """Test concurrence is 2|B1||B2| for any phases"""
        pair = AmplitudePair(B1=0.6 * np.exp(0.4j), B2=0.8 * np.exp(-2.0j))
        self.assertAlmostEqual(concurrence(pair), 0.96, places=14)

    def test_decayed_population(self):
        """Test population counts only the remaining excitation"""
        pair = AmplitudePair(B1=0.3, B2=0.4j)
        self.assertAlmostEqual(population(pair), 0.25, places=15)

    def test_arrays(self):
        """Test the observables work elementwise on trajectories"""
        Cs = np.exp(-np.linspace(0, 5, 11)) + 0j
        pair = bare_from_dicke(DickePair(Cs=Cs, Ca=np.zeros_like(Cs)))
        np.testing.assert_allclose(concurrence(pair), np.abs(Cs) ** 2, rtol=1e-14)
        np.testing.assert_allclose(population(pair), np.abs(Cs) ** 2, rtol=1e-14)

    def test_concurrence_from_dicke_amplitudes(self):
        """Test 2|B1 B2*| equals | |Cs|^2 - |Ca|^2 + 2i Im(Cs Ca*) | when both Dicke amplitudes are present"""
        rng = np.random.default_rng(7)
        for _ in range(20):
            Cs, Ca = rng.normal(size=2) + 1j * rng.normal(size=2)
            scale = math.sqrt(abs(Cs) ** 2 + abs(Ca) ** 2)
            Cs, Ca = Cs / scale, Ca / scale
            direct = abs(abs(Cs) ** 2 - abs(Ca) ** 2 + 2j * (Cs * Ca.conjugate()).imag)
            self.assertAlmostEqual(concurrence(bare_from_dicke(DickePair(Cs=Cs, Ca=Ca))), direct, delta=1e-12)
