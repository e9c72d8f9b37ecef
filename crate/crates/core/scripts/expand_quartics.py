import sympy as sp, time, sys
t0=time.time()
syms=sp.symbols('t0:27')
gens=syms
def P(e): return sp.Poly(e,*gens,domain='ZZ')
T=[[[P(syms[i*9+j*3+k]) for k in range(3)] for j in range(3)] for i in range(3)]
zero=P(0)
def mul(A,B): return [[sum((A[r][m]*B[m][c] for m in range(3)),zero) for c in range(3)] for r in range(3)]
def tr_(A): return [[A[c][r] for c in range(3)] for r in range(3)]
def add(A,B): return [[A[r][c]+B[r][c] for c in range(3)] for r in range(3)]
def sub(A,B): return [[A[r][c]-B[r][c] for c in range(3)] for r in range(3)]
def sc(a,A): return [[A[r][c]*a for c in range(3)] for r in range(3)]
def tr(A): return A[0][0]+A[1][1]+A[2][2]
def psi(X,Y): return tr(X)*tr(Y)-tr(mul(X,Y))*2
U=[mul(T[k],tr_(T[k])) for k in range(3)]
V=[add(mul(T[k],tr_(T[(k+1)%3])),mul(T[(k+1)%3],tr_(T[k]))) for k in range(3)]
out=[]
for tmpl in range(5):
  for s in range(3):
    u=lambda k:U[(k-1+s)%3]; v=lambda k:V[(k-1+s)%3]
    if tmpl==0: D=sub(u(3),u(1)); r=psi(D,D)-psi(v(3),v(3))
    if tmpl==1: r=psi(sub(u(3),u(1)),v(1))+psi(v(2),v(3))
    if tmpl==2: r=psi(sub(u(1),u(2)),v(1))
    if tmpl==3:
        W=sub(u(3),u(1)); r=tr(u(2))**2-tr(v(3))**2-tr(add(sub(mul(u(2),u(2)),mul(v(3),v(3))),mul(W,W)))
    if tmpl==4: r=tr(v(2))*tr(sub(sub(u(1),sc(2,u(2))),u(3)))-tr(v(1))*tr(v(3))+tr(mul(v(2),u(2)))*2
    out.append(r)
with open(sys.argv[1],'w') as f:
  f.write("# Expanded monomials of the 15 quartic constraints.\n# Line format: <constraint index 0..14> <integer coefficient> <i> <j> <k> <l>\n# where i..l index the 27 tensor entries (slice*9 + row*3 + col).\n")
  for ci,r in enumerate(out):
    for mon,c in r.terms():
        idx=[]
        for v,e in enumerate(mon): idx+= [v]*e
        assert len(idx)==4
        f.write(f"{ci} {c} {idx[0]} {idx[1]} {idx[2]} {idx[3]}\n")
    print(ci,len(r.terms()),time.time()-t0,file=sys.stderr)
