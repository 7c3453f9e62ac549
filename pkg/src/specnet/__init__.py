"""Spectral-network lifting and (non-)abelianization of local systems over involutive algebras."""
