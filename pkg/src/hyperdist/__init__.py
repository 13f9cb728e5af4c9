"""
hyperdist: funciones generalizadas no estándar a escala de escritorio

Descripción:
    Motor simbólico-numérico que realiza los hiperreales como series
    truncadas en un infinitesimal ε, representa funciones internas como
    árboles de expresiones y calcula el producto casi-interno ⟨f,*g⟩, la
    delta de Dirac y sus derivadas, el ajuste de Legendre de funcionales y
    los verificadores de S-continuidad y *-continuidad.
"""

__version__ = "0.1.0"
