"""vwlab - numerical laboratory for the perturbed Vafa-Witten equations on T^4."""
